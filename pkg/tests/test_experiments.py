import math
import warnings

import numpy as np
import pytest

from cascadejsa.errors import ConfigError
from cascadejsa.experiments import (Axis, SweepSpec, bind, convergence_check, evaluate_point, heatmap,
                                    refine_extrema, run_sweep)
from cascadejsa.grid import PhysicalParams
from cascadejsa.modulation import SchemePreset


def fc(phi=0.0, gamma_c=1.0, target="i"):
    return SchemePreset("fc", {"phi": phi, "gamma_c": gamma_c, "target": target})


def entropies(records):
    return np.array([r.entropy for r in records])


def test_axis_values():
    np.testing.assert_allclose(Axis("phi", 0, 1, 5).values(), [0, 0.25, 0.5, 0.75, 1])
    np.testing.assert_allclose(Axis("gamma_c", 0.1, 10, 3, "log").values(), [0.1, 1, 10])
    np.testing.assert_array_equal(Axis("stages", 1, 6, 6).values(), [1, 2, 3, 4, 5, 6])
    assert Axis("phi", 0.5, 1, 1).values().tolist() == [0.5]


@pytest.mark.parametrize("kw", [dict(steps=0), dict(start=2, stop=1), dict(scale="log", start=0),
                                dict(scale="cubic")])
def test_axis_validation(kw):
    args = dict(name="gamma_c", start=0.1, stop=1.0, steps=3, scale="linear")
    args.update(kw)
    with pytest.raises(ConfigError):
        Axis(**args)


def test_stages_axis_must_be_integral():
    with pytest.raises(ConfigError):
        Axis("stages", 1, 2, 3).values()


def test_bind_preset_and_template():
    assert bind(fc(), {"phi": 2.0}).params["phi"] == 2.0
    it = SchemePreset("iterated", {"stages": 1, "gamma_c_i": 1, "gamma_c_s": 1})
    bound = bind(it, {"gamma_c": 3.0})
    assert bound.params["gamma_c_i"] == bound.params["gamma_c_s"] == 3.0
    assert bind("base * phase({phi})", {"phi": 0.5}) == "base * phase(0.5)"
    with pytest.raises(ConfigError):
        bind(SchemePreset("fe", {"gamma_c": 1}), {"phi": 0.0})


def test_fc_phase_minimum_near_pi():
    spec = SweepSpec(Axis("phi", 0, 2 * math.pi, 33), fc(), points=512)
    recs = run_sweep(spec)
    phis = np.array([r.values["phi"] for r in recs])
    assert abs(phis[np.argmin(entropies(recs))] - math.pi) <= math.pi / 8


def test_fc_zero_phase_entropy_grows_with_linewidth():
    values = [evaluate_point(SweepSpec(Axis("gamma_c", 0.1, 10, 3, "log"), fc(), points=512),
                             {"gamma_c": g}).entropy for g in (0.1, 1.0, 10.0)]
    assert values[0] < values[1] < values[2]


def test_fs_extrema():
    spec = SweepSpec(Axis("phi", 0, 2 * math.pi, 17), SchemePreset("fs", {"phi": 0.0}), points=512)
    recs = run_sweep(spec)
    s = entropies(recs)
    assert np.argmax(s) == 8  # phi = pi
    assert np.argmin(s) in (0, 16)


def test_sweep_is_deterministic_and_ordered():
    spec = SweepSpec(Axis("gamma_c_s", 0.1, 10, 3), SchemePreset("fa", {"gamma_c_s1": 1, "gamma_c_i2": 1}),
                     points=256, axis2=Axis("gamma_c_i", 0.1, 10, 2))
    a = run_sweep(spec)
    b = run_sweep(spec)
    assert [r.values for r in a] == [
        {"gamma_c_s": s, "gamma_c_i": i} for s in spec.axis1.values() for i in spec.axis2.values()]
    for x, y in zip(a, b):
        assert (x.values, x.entropy, x.purity, x.lambdas, x.tail) == (y.values, y.entropy, y.purity, y.lambdas, y.tail)


def test_parallel_matches_serial():
    spec = SweepSpec(Axis("phi", 0, 3, 3), fc(), points=256)
    serial = run_sweep(spec)
    parallel = run_sweep(spec, workers=2)
    assert [r.entropy for r in serial] == [r.entropy for r in parallel]


def test_failures_are_recorded_inline():
    spec = SweepSpec(Axis("phi", 0, 2 * math.pi, 3), "base * phase({phi}) + base", points=256)
    recs = run_sweep(spec)
    assert [r.ok for r in recs] == [True, False, True]
    assert "DegenerateFieldError" in recs[1].error
    assert math.isnan(recs[1].entropy)


def test_unused_axis_gives_constant_entropy():
    recs = run_sweep(SweepSpec(Axis("phi", 0, 6, 4), "base", points=256))
    assert len(set(entropies(recs))) == 1


def test_heatmap_and_saddle():
    spec = SweepSpec(Axis("gamma_c_s", 0.1, 10, 6, "log"), SchemePreset("fa", {"gamma_c_s1": 1, "gamma_c_i2": 1}),
                     points=256, axis2=Axis("gamma_c_i", 0.1, 10, 6, "log"))
    a, b, mat = heatmap(spec, run_sweep(spec))
    assert mat.shape == (6, 6)
    mixed = np.diff(np.diff(mat, axis=0), axis=1)
    assert mixed.max() > 0 > mixed.min()
    with pytest.raises(ConfigError):
        heatmap(SweepSpec(Axis("phi", 0, 1, 2), "base", points=256), [])


def test_refine_extrema():
    spec = SweepSpec(Axis("phi", 0, 2 * math.pi, 5), SchemePreset("fs", {"phi": 0.0}), points=256)
    out = refine_extrema(spec, run_sweep(spec), points=512)
    assert out["max"].values == {"phi": math.pi}
    assert out["min"].entropy < out["max"].entropy


def test_fb_never_below_baseline_small_grid():
    base = evaluate_point(SweepSpec(Axis("phi", 0, 1, 1), "base", points=256), {}).entropy
    spec = SweepSpec(Axis("gamma_c_i1", 0.1, 10, 4, "log"), SchemePreset("fb", {"gamma_c_i1": 1, "gamma_c_i2": 1}),
                     points=256, axis2=Axis("gamma_c_i2", 0.1, 10, 4, "log"))
    _, _, mat = heatmap(spec, run_sweep(spec))
    assert np.all(mat >= base - 1e-3)
    np.testing.assert_allclose(np.diag(mat), base, atol=1e-3)


def test_convergence_check_base():
    rep = convergence_check("base", PhysicalParams(), 150.0, 256, 3)
    assert rep.points == (256, 512, 1024)
    assert rep.converged and rep.monotone


def test_convergence_check_separable():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = convergence_check("cav(i, 1) * cav(s, 2)", PhysicalParams(), 150.0, 256, 2)
    assert max(rep.entropies) < 1e-8


def test_convergence_check_rejects_small_base():
    with pytest.raises(ConfigError):
        convergence_check("base", PhysicalParams(), 150.0, 128)
