import cmath

import pytest

from qftca import SimConfig, CounterRNG, make_particle_wave
from qftca.collapse import conservation_audit
from qftca.errors import LatticeError, StructureError
from qftca.eventlog import step_record
from qftca.lattice import (
    Fluctuation, Lattice, Outcome, SystemState, classify_outcome, fluctuation_candidates,
    global_update, proper_timestep, pw_update, run, sample_fluctuation,
)
from qftca.qstate import ANTIMUON, ELECTRON, MUON, PHOTON, FourMomentum, PathRef
from qftca.stats import binomial_bounds

X = (6, 8, 8)


def around(source, target, tol=1e-12):
    return abs(source - target) <= tol


def muons(config, x1=X, x2=X):
    state = SystemState(config)
    state.add(make_particle_wave(MUON, FourMomentum.on_shell(MUON.mass, 40.0, 0.0, 0.0), 0.5, x1))
    state.add(make_particle_wave(ANTIMUON, FourMomentum.on_shell(ANTIMUON.mass, -40.0, 0.0, 0.0), -0.5, x2))
    return state


def test_lattice_index():
    lattice = Lattice((4, 4))
    q = make_particle_wave(PHOTON, FourMomentum(1.0, 1.0, 0.0, 0.0), 1.0, (1, 2)).with_id(3)
    lattice.register(q)
    assert lattice.occupants((1, 2)) == [(3, 0)]
    assert lattice.audit()
    lattice.unregister(3)
    assert lattice.occupants((1, 2)) == []
    assert not lattice.cells
    with pytest.raises(LatticeError):
        lattice.register(q.with_id(-1))
    with pytest.raises(LatticeError):
        lattice.register(make_particle_wave(PHOTON, FourMomentum(1.0, 1.0, 0.0, 0.0), 1.0, (4, 0)).with_id(1))
    assert lattice.wrap((4, -1)) == (0, 3)
    assert Lattice((4, 4), boundary='absorb').wrap((4, 0)) is None


def test_state_ids_and_sharing():
    state = muons(SimConfig())
    assert sorted(state.objects) == [0, 1]
    assert state.lattice.shared_cells() == [(X, [(0, 0), (1, 0)])]
    (candidate,) = fluctuation_candidates(state)
    assert candidate[:3] == (X, PathRef(0, 0), PathRef(1, 0))
    assert candidate[3] == 0.0


def test_free_photon_propagation():
    q = make_particle_wave(PHOTON, FourMomentum(2.0, 2.0, 0.0, 0.0), 1.0, (1, 1, 1)).with_id(0)
    assert proper_timestep(q, 1.0) == 0.0
    moved = pw_update(q, 0.0, 1.0)
    (e,) = moved.paths[0].elements
    assert e.x == (2, 1, 1)
    assert around(moved.paths[0].amplitude, cmath.exp(-2j))
    lattice = Lattice((3, 3, 3), boundary='absorb')
    assert pw_update(pw_update(q, 0.0, 1.0), 0.0, 1.0, lattice=lattice) is None


def test_massive_propagation():
    q = make_particle_wave(MUON, FourMomentum.on_shell(MUON.mass, 40.0, 0.0, 0.0), 0.5, (0, 0, 0)).with_id(0)
    e = q.paths[0].elements[0]
    dtau = proper_timestep(q, 1.0)
    assert around(dtau, MUON.mass / e.p.e)
    moved = pw_update(q, dtau, 1.0)
    (m,) = moved.paths[0].elements
    assert m.x == (0, 0, 0)
    assert around(m.offset[0], 40.0 / e.p.e)
    assert around(moved.paths[0].amplitude, cmath.exp(-1j * e.p.e * dtau), 1e-9)
    assert around(abs(moved.paths[0].amplitude), 1.0)


def test_free_electron_follows_group_velocity():
    config = SimConfig(timestep=0.7, spacing=0.9)
    state = SystemState(config)
    start = (8, 8, 8)
    q = state.add(make_particle_wave(ELECTRON, FourMomentum.on_shell(ELECTRON.mass, 0.37, -0.21, 0.93), 0.5, start))
    e0 = q.paths[0].elements[0]
    v = e0.velocity()
    previous = start
    for t in range(1, 11):
        global_update(state)
        assert state.lattice.audit()
        (e,) = state.objects[q.id].paths[0].elements
        assert all(abs(a - b) <= 1 for a, b in zip(e.x, previous))
        previous = e.x
        for c, o, x0, vc in zip(e.x, e.offset, start, v):
            assert around(c + o, x0 + vc * t * config.timestep / config.spacing, 1e-9)
    amplitude = state.objects[q.id].paths[0].amplitude
    assert around(abs(amplitude), 1.0)
    assert around(amplitude, cmath.exp(-1j * e0.p.e * proper_timestep(q, config.timestep) * 10), 1e-9)


def test_unitarity_without_interactions():
    state = muons(SimConfig(dims=(16, 16, 16)), x2=(2, 2, 2))
    norm = state.total_norm()
    for _ in range(1000):
        global_update(state)
        assert state.lattice.audit()
    assert state.step == 1000
    assert len(state.events) == 1000
    assert all(around(ev.norm, norm, 1e-10) for ev in state.events)
    assert all(ev.interaction is None for ev in state.events)


def test_fluctuation_firing_rate():
    state = muons(SimConfig(fluct_rate=0.3))
    n = 2000
    fired = sum(sample_fluctuation(state, CounterRNG(k)) is not None for k in range(n))
    low, high = binomial_bounds(n, 0.3, 4)
    assert low <= fired / n <= high
    assert sample_fluctuation(muons(SimConfig())) is None


def test_outcome_classification():
    f = Fluctuation(X, PathRef(0, 0), PathRef(1, 0))
    assert classify_outcome(f, CounterRNG(1)) is Outcome.INTERACTION_COLLAPSE
    assert classify_outcome(f, CounterRNG(1), volatile_prob=1.0) is Outcome.INTERACTION_VOLATILE
    with pytest.raises(StructureError):
        Fluctuation(X, PathRef(0, 0), PathRef(0, 1))


def test_volatile_interaction_keeps_superpositions():
    state = muons(SimConfig(fluct_rate=1.0, volatile_prob=1.0))
    before = dict(state.objects)
    global_update(state)
    (event,) = state.events
    assert event.outcome is Outcome.INTERACTION_VOLATILE
    assert event.interaction is None
    assert sorted(state.objects) == sorted(before)
    assert state.interactions == 0


def test_collapsing_interaction_in_evolution():
    state = muons(SimConfig(fluct_rate=1.0, graining=4))
    global_update(state)
    (event,) = state.events
    assert event.outcome is Outcome.INTERACTION_COLLAPSE
    assert conservation_audit(event.interaction)
    assert state.interactions == 1
    # both in objects were consumed, the out collection got the next id
    assert sorted(state.objects) == [2]
    assert around(event.norm, 1.0, 1e-12)
    run(state, 5)
    assert state.interactions == 1
    assert state.step == 6


def test_co_moving_photons_do_nothing():
    state = SystemState(SimConfig(fluct_rate=1.0, graining=4, fermion_exchange=True))
    state.add(make_particle_wave(PHOTON, FourMomentum(5.0, 0.0, 0.0, 5.0), 1.0, (4, 4, 4)))
    state.add(make_particle_wave(PHOTON, FourMomentum(3.0, 0.0, 0.0, 3.0), 1.0, (4, 4, 4)))
    run(state, 3)
    assert [ev.outcome for ev in state.events] == [Outcome.NOTHING] * 3
    assert state.interactions == 0
    assert sorted(state.objects) == [0, 1]
    assert state.objects[0].paths[0].elements[0].x == (4, 4, 7)


def test_stop_after_interactions():
    state = muons(SimConfig(fluct_rate=1.0, graining=4))
    run(state, 50, stop_after_interactions=1)
    assert state.interactions == 1
    assert state.step == 1


def test_determinism_across_workers():
    logs = []
    for workers in (1, 8):
        state = muons(SimConfig(fluct_rate=0.4, graining=4, workers=workers, seed=4242), x2=(7, 8, 8))
        run(state, 8)
        logs.append([step_record(ev) for ev in state.events])
    assert logs[0] == logs[1]
