import math

import pytest
import torch

from qftca import SimConfig, CounterRNG, DEFAULT_QED_RULES, make_entangled_pair, make_particle_wave
from qftca.collapse import (
    collapse_in_collections, combination_weights, conservation_audit, form_interaction_object,
    measure_path, merge_channels, perform_interaction, polar_distribution, process_channels,
    select_interacting_path, select_out_combination,
)
from qftca.errors import CoverageError, EmptyChannelSetError, StructureError
from qftca.qstate import ELECTRON, MUON, PHOTON, POSITRON, FourMomentum, Kind, Path, QObject, make_element
from qftca.stats import chisquare, total_variation

X = (4, 4, 4)
PZ = 4.9738


def around(source, target, tol=1e-12):
    return abs(source - target) <= tol


def head_on(pz=PZ, s1=0.5, s2=-0.5, ids=(0, 1)):
    pw1 = make_particle_wave(ELECTRON, FourMomentum.on_shell(ELECTRON.mass, 0.0, 0.0, pz), s1, X)
    pw2 = make_particle_wave(POSITRON, FourMomentum.on_shell(POSITRON.mass, 0.0, 0.0, -pz), s2, X)
    return pw1.with_id(ids[0]), pw2.with_id(ids[1])


def interaction_object(pz=PZ, config=SimConfig()):
    pw1, pw2 = head_on(pz)
    ia = form_interaction_object(pw1.paths[0].elements[0], pw2.paths[0].elements[0])
    return process_channels(ia, DEFAULT_QED_RULES, config)


def entangled(x1=X, x2=(6, 6, 6)):
    p1 = FourMomentum.on_shell(ELECTRON.mass, 0.0, 0.0, 3.0)
    p2 = FourMomentum.on_shell(POSITRON.mass, 0.0, 0.0, -3.0)
    pw1 = (make_element(ELECTRON, p1, 0.5, x1), make_element(ELECTRON, p1, -0.5, x1))
    pw2 = (make_element(POSITRON, p2, -0.5, x2), make_element(POSITRON, p2, 0.5, x2))
    return make_entangled_pair(pw1, pw2).with_id(0)


def test_interaction_conserves_momentum_and_charge():
    pw1, pw2 = head_on()
    rec = perform_interaction(pw1, pw2, X, CounterRNG(5).stream('t'), config=SimConfig(graining=8, max_paths=256))
    assert rec.selected_out_types == (ELECTRON, POSITRON)
    assert rec.channels == ('C1[e-,e+]', 'C3[e-,e+]')
    assert conservation_audit(rec)
    assert rec.out_collection.kind is Kind.PW_COLLECTION
    assert rec.out_collection.id == -1
    assert around(rec.out_collection.total_weight, 1.0)
    assert rec.discarded_path_counts == ((0, 0), (1, 0))
    assert rec.survivors == ()
    total = pw1.paths[0].elements[0].p + pw2.paths[0].elements[0].p
    for path in rec.out_collection.paths:
        b, c = path.elements
        assert b.p + c.p == total
        assert b.x == c.x == X


def test_interaction_is_reproducible():
    pw1, pw2 = head_on()
    config = SimConfig(graining=8, max_paths=256)
    first = perform_interaction(pw1, pw2, X, CounterRNG(9).stream('t'), config=config)
    second = perform_interaction(pw1, pw2, X, CounterRNG(9).stream('t'), config=config)
    assert first == second


def test_merged_amplitudes_are_signed_channel_sums():
    ia = interaction_object(config=SimConfig(graining=4))
    c1, c3 = ia.channels
    combo, grid, amps = ia.merged[0]
    assert combo == (ELECTRON, POSITRON)
    for k, path in enumerate(c1.paths):
        assert path.elements == grid[k]
        assert around(amps[k], c1.sign * path.amplitude + c3.sign * c3.paths[k].amplitude, 1e-12)


def test_out_combination_frequencies():
    # at sqrt(s) = 1 GeV the muon pair is open, the tau pair is not
    config = SimConfig(graining=6)
    ia = interaction_object(pz=500.0, config=config)
    assert ia.combinations == [(ELECTRON, POSITRON), (MUON, MUON.antiparticle)]
    weights = combination_weights(ia)
    assert weights == combination_weights(ia, phase_space_weighting=False)
    assert all(w == math.fsum(abs(a) ** 2 for a in amps) for w, (_, _, amps) in zip(weights, ia.merged))
    rng = CounterRNG(2024)
    n = 3000
    observed = [0, 0]
    for k in range(n):
        combo = select_out_combination(ia, rng.stream('combo', k))
        observed[ia.combinations.index(combo)] += 1
    _, _, p = chisquare(observed, weights)
    assert p > 1e-3


def test_phase_space_weighting():
    ia = interaction_object(pz=500.0, config=SimConfig(graining=6))
    plain = combination_weights(ia)
    weighted = combination_weights(ia, phase_space_weighting=True)
    s = (ia.in_elements[0].p + ia.in_elements[1].p).mass2
    k_mu = math.sqrt(s / 4 - MUON.mass ** 2)
    assert around(weighted[1] / plain[1], k_mu / math.sqrt(s), 1e-9)


def test_born_rule_detection():
    ia = interaction_object(config=SimConfig(graining=8))
    out = merge_channels(ia, (ELECTRON, POSITRON), max_paths=256)
    bins = 8
    expected = polar_distribution(out, bins)
    rng = CounterRNG(31)
    observed = [0] * bins
    for k in range(2000):
        first = out.paths[measure_path(out, rng.stream('detect', k))].elements[0]
        cos = first.p.pz / first.p.p_abs
        observed[min(int((cos + 1) / 2 * bins), bins - 1)] += 1
    _, _, p = chisquare(observed, expected)
    assert p > 1e-3


def test_forward_peak():
    ia = interaction_object(config=SimConfig(graining=8))
    dist = polar_distribution(merge_channels(ia, (ELECTRON, POSITRON), max_paths=256), 4)
    assert around(dist.sum().item(), 1.0)
    # the t-channel photon favours small scattering angles of the electron
    assert dist[3] > dist[2] > dist[1]


def test_graining_convergence():
    coarse = interaction_object(config=SimConfig(graining=32))
    fine = interaction_object(config=SimConfig(graining=64))
    a = polar_distribution(merge_channels(coarse, (ELECTRON, POSITRON), max_paths=32 * 32 * 4), 6, 0.75)
    b = polar_distribution(merge_channels(fine, (ELECTRON, POSITRON), max_paths=64 * 64 * 4), 6, 0.75)
    assert total_variation(a, b) < 0.02


def test_merge_pruning_and_truncation():
    ia = interaction_object(config=SimConfig(graining=4))
    full = merge_channels(ia, (ELECTRON, POSITRON))
    assert len(full.paths) <= 4 * 4 * 4
    kept = merge_channels(ia, (ELECTRON, POSITRON), max_paths=10)
    assert len(kept.paths) == 10
    assert around(kept.total_weight, 1.0)
    largest = max(abs(p.amplitude) for p in full.paths)
    assert all(abs(p.amplitude) >= 1e-14 * largest for p in full.paths)
    with pytest.raises(StructureError):
        merge_channels(ia, (MUON, MUON.antiparticle))


def test_pruning_is_relative_to_the_largest_amplitude():
    ia = interaction_object(config=SimConfig(graining=4))
    _, grid, amps = ia.merged[0]
    largest = max(abs(a) for a in amps)
    pruned = merge_channels(ia, (ELECTRON, POSITRON), prune_threshold=0.5)
    expected = [tuple(pair) for pair, a in zip(grid, amps) if abs(a) >= 0.5 * largest]
    assert [p.elements for p in pruned.paths] == expected
    assert 0 < len(pruned.paths) < len(grid)
    assert around(pruned.total_weight, 1.0)


def test_entangled_partner_collapses():
    pair = entangled()
    positron = make_particle_wave(POSITRON, FourMomentum.on_shell(POSITRON.mass, 0.0, 0.0, -3.0), 0.5, X).with_id(1)
    config = SimConfig(graining=4)
    rng = CounterRNG(77)
    n = 2000
    up = 0
    for k in range(n):
        rec = perform_interaction(pair, positron, X, rng.stream('pair', k), config=config)
        interacting = rec.in_elements[0]
        (partner,) = rec.survivors
        assert partner.id == 0
        assert partner.kind is Kind.PARTICLE_WAVE
        (element,) = partner.paths[0].elements
        assert element.sigma == -interacting.sigma
        assert element.x == (6, 6, 6)
        assert partner.paths[0].amplitude == 1.0
        assert rec.discarded_path_counts == ((0, 1), (1, 0))
        up += interacting.sigma > 0
    _, _, p = chisquare([up, n - up], [0.5, 0.5])
    assert p > 1e-3


def test_collapse_keeps_unrelated_objects():
    pair = entangled()
    pw1, pw2 = head_on(ids=(5, 6))
    rec = perform_interaction(pw1, pw2, X, CounterRNG(1).stream('x'), config=SimConfig(graining=4))
    assert collapse_in_collections(rec, [pair]) == [pair]


def test_selection_errors():
    pair = entangled()
    with pytest.raises(CoverageError):
        select_interacting_path(pair, (0, 0, 0), CounterRNG(1).stream('c'))
    assert select_interacting_path(pair, (6, 6, 6), CounterRNG(1).stream('c')) in (0, 1)
    e1 = make_element(ELECTRON, FourMomentum.on_shell(ELECTRON.mass, 0.0, 0.0, 1.0), 0.5, X)
    e2 = make_element(POSITRON, FourMomentum.on_shell(POSITRON.mass, 0.0, 0.0, 1.0), 0.5, (0, 0, 0))
    with pytest.raises(StructureError):
        form_interaction_object(e1, e2)
    pw1, _ = head_on()
    with pytest.raises(StructureError):
        perform_interaction(pw1, pw1, X, CounterRNG(1).stream('c'))


def test_photon_pair_has_no_channel():
    k = FourMomentum(2.0, 0.0, 0.0, 2.0)
    g1 = make_particle_wave(PHOTON, k, 1.0, X).with_id(0)
    g2 = make_particle_wave(PHOTON, -k + FourMomentum(4.0, 0.0, 0.0, 0.0), -1.0, X).with_id(1)
    with pytest.raises(EmptyChannelSetError):
        perform_interaction(g1, g2, X, CounterRNG(1).stream('g'))


def test_collinear_photons_are_closed():
    config = SimConfig(graining=4, fermion_exchange=True)
    g1 = make_particle_wave(PHOTON, FourMomentum(5.0, 0.0, 0.0, 5.0), 1.0, X).with_id(0)
    g2 = make_particle_wave(PHOTON, FourMomentum(3.0, 0.0, 0.0, 3.0), 1.0, X).with_id(1)
    with pytest.raises(EmptyChannelSetError):
        perform_interaction(g1, g2, X, CounterRNG(1).stream('g'), config=config)


def test_polar_distribution_shape():
    ia = interaction_object(config=SimConfig(graining=4))
    dist = polar_distribution(merge_channels(ia, (ELECTRON, POSITRON)), 5)
    assert dist.shape == (5,)
    assert dist.dtype == torch.float64


def test_interacting_path_frequencies():
    p = FourMomentum.on_shell(ELECTRON.mass, 0.0, 0.0, 1.0)
    amplitudes = (0.2, 0.5j, -0.4, 0.7)
    elements = [make_element(ELECTRON, p, 0.5, X), make_element(ELECTRON, p, -0.5, X),
                make_element(ELECTRON, p, 0.5, (0, 0, 0)), make_element(ELECTRON, p, -0.5, (0, 0, 0))]
    q = QObject(Kind.PARTICLE_WAVE, [Path((e,), a) for e, a in zip(elements, amplitudes)])
    rng = CounterRNG(404)
    n = 20000
    observed = [0, 0]
    for k in range(n):
        observed[select_interacting_path(q, X, rng.stream('born', k))] += 1
    # only the two paths covering X compete
    _, _, p_value = chisquare(observed, [0.04, 0.25])
    assert p_value > 1e-3
