"""A minimal sample script for illustration of basic usage of the qftca package"""

import math

from qftca import (
    SimConfig, CounterRNG, make_particle_wave, perform_interaction, bhabha_total,
    spin_averaged_M2,
)
from qftca.amplitudes import bhabha_kinematics, bhabha_spin_sum, mandelstam
from qftca.qstate import ELECTRON, POSITRON, FourMomentum

config = SimConfig(graining=16, max_paths=1024, seed=7)
e = config.coupling

# the keystone amplitude at one kinematic point: sqrt(s) = 10 MeV, theta = 90 deg
kin = bhabha_kinematics(10.0, math.pi / 2)
print(bhabha_total(kin, (0.5, -0.5, 0.5, -0.5), e).item())
s, t, u = mandelstam(kin)
print(bhabha_spin_sum(kin, e).item() / e ** 4,
      spin_averaged_M2(s, t, u, e, 4 * ELECTRON.mass ** 2).item() / e ** 4)

# one collapsing interaction of a head-on electron/positron pair in cell (4, 4, 4)
x = (4, 4, 4)
pw1 = make_particle_wave(ELECTRON, FourMomentum.on_shell(ELECTRON.mass, 0.0, 0.0, 5.0), 0.5, x).with_id(0)
pw2 = make_particle_wave(POSITRON, FourMomentum.on_shell(POSITRON.mass, 0.0, 0.0, -5.0), -0.5, x).with_id(1)
record = perform_interaction(pw1, pw2, x, CounterRNG(config.seed).stream('sample'), config=config)
print(' '.join(str(t) for t in record.selected_out_types), len(record.out_collection.paths))
