from qftca.alias_multinomial import AliasMultinomial
from qftca.config import SimConfig
from qftca.qstate import (
    ParticleType, FourMomentum, StateElement, Path, PathRef, QObject, Kind,
    particle, make_particle_wave, make_entangled_pair, normalize, path_probability,
)
from qftca.channels import (
    VertexRule, IaChannel, DEFAULT_QED_RULES, enumerate_shapes, instantiate_channels,
    reduce_equivalent, relative_sign, split_outcomes, combine_elements, load_rules,
)
from qftca.amplitudes import (
    bhabha_MA, bhabha_MB, bhabha_total, channel_amplitude, channel_amplitudes,
    spin_averaged_M2,
)
from qftca.collapse import (
    InteractionRecord, select_interacting_path, form_interaction_object,
    process_channels, select_out_combination, merge_channels,
    collapse_in_collections, perform_interaction,
)
from qftca.lattice import (
    Lattice, SystemState, Fluctuation, Outcome, global_update, proper_timestep,
    pw_update, sample_fluctuation, classify_outcome,
)
from qftca.rng import CounterRNG
