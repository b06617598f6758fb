import math

import numpy as np
import pytest

from precodekit.errors import ArchitectureMismatch, UnknownStrategy
from precodekit.harness import compute_metrics, feasibility_check
from precodekit.harness.report import IoError, emit_report, markdown_table, ranking
from precodekit.harness.sweep import (CSV_HEADER, MetricTable, feasibility_matrix,
                                      realization_seed, sweep)
from precodekit.model import BeamformerMatrix, PhaseVector
from precodekit.precoders import mrt, zf
from precodekit.scenarios import ScenarioDescriptor, instantiate_scenario

from pathlib import Path

GOLDEN = Path(__file__).parent / "golden"


def direct_sinr(H, W, sigma2):
    """Independent loop implementation of the per-user SINR."""
    K = H.shape[0]
    out = []
    for k in range(K):
        sig = abs(sum(H[k, n] * W[n, k] for n in range(H.shape[1]))) ** 2
        interf = 0.0
        for j in range(W.shape[1]):
            if j != k:
                interf += abs(sum(H[k, n] * W[n, j] for n in range(H.shape[1]))) ** 2
        out.append(sig / (interf + sigma2))
    return np.array(out)


def test_single_user_sinr():
    _, theta = instantiate_scenario(8, 10, 0)
    data = theta.to_dict()
    data["sys"]["K"] = 1
    data["ch"]["H"] = [[[1.0, 0.0]] + [[0.0, 0.0]] * 7]
    theta1 = ScenarioDescriptor.from_dict(data)
    W = np.zeros((8, 1), complex)
    W[0, 0] = math.sqrt(0.7)
    m = compute_metrics(BeamformerMatrix(W), theta1)
    assert m.per_user_sinr[0] == pytest.approx(0.7 / theta1.sigma2, rel=1e-14)


@pytest.mark.parametrize("seed", range(3))
def test_sinr_dual_implementation(seed):
    _, theta = instantiate_scenario(8, 5, seed)
    W = np.random.default_rng(seed).standard_normal((8, 4)) + 0j
    m = compute_metrics(BeamformerMatrix(W), theta)
    ref = direct_sinr(theta.H, W, theta.sigma2)
    np.testing.assert_allclose(m.per_user_sinr, ref, rtol=1e-12)
    assert m.sum_rate == pytest.approx(np.sum(np.log2(1 + ref)), rel=1e-12)
    assert m.populated == {"total_power": True, "per_user_sinr": True, "sum_rate": True,
                           "normalized_margin": False, "robust_margin": False,
                           "secrecy_rate": False}


def test_margin_boundary_and_halving():
    from precodekit.metrics import normalized_margin
    x = np.array([np.exp(1j * math.pi / 4)])
    assert normalized_margin(np.ones((1, 1)), x, np.ones(1), 4, 1.0) == pytest.approx(0, abs=1e-15)
    _, a = instantiate_scenario(2, 0, 3)
    _, b = instantiate_scenario(2, 10 * math.log10(4), 3)
    sol = PhaseVector(np.zeros(8), 1.0)
    ma = compute_metrics(sol, a).normalized_margin
    mb = compute_metrics(sol, b).normalized_margin
    assert mb == pytest.approx(2 * ma, rel=1e-12)


def test_architecture_mismatch():
    _, theta = instantiate_scenario(3, 0, 0)
    with pytest.raises(ArchitectureMismatch):
        compute_metrics(PhaseVector(np.zeros(8), 1.0), theta)


def test_feasibility_examples():
    _, theta = instantiate_scenario(8, 0, 0)
    W = mrt(theta.H, theta.p_max).W
    assert feasibility_check(BeamformerMatrix(W), theta) == []
    v = feasibility_check(BeamformerMatrix(1.1 * W), theta)
    assert len(v) == 1 and v[0].kind == "TotalPower"
    assert v[0].magnitude == pytest.approx(0.21, abs=1e-12)
    _, ce = instantiate_scenario(2, 0, 0)
    kinds = {x.kind for x in feasibility_check(PhaseVector(np.zeros(8), 1.21), ce)}
    assert "UnitModulus" in kinds and "TotalPower" in kinds
    nudged = PhaseVector(np.zeros(8), 1.0 * (1 + 4e-6))
    assert [x.kind for x in feasibility_check(nudged, ce) if x.kind == "UnitModulus"] == \
        ["UnitModulus"]


def test_realization_seed_common_numbers():
    assert realization_seed(0, 3) == realization_seed(0, 3)
    assert realization_seed(0, 3) != realization_seed(1, 3)


def test_sweep_determinism_and_csv_round_trip(tmp_path):
    args = ([8], ["zf", "rzf"], [0.0, 10.0], 3, 7)
    a, b = sweep(*args), sweep(*args)
    assert a == b and a.to_csv() == b.to_csv()
    assert a.to_csv().splitlines()[0] == ",".join(CSV_HEADER)
    path = a.write_csv(tmp_path / "t.csv")
    assert MetricTable.read_csv(path) == a
    cells = {(r.method, r.snr_db): r for r in a.rows}
    assert len(cells) == 4 and all(r.n == 3 for r in a.rows)


def full_power_mrt(theta):
    return mrt(theta.H, theta.p_max)


def test_sweep_parallel_matches_serial():
    args = ([2, 8], ["zf", ("mrt_fn", full_power_mrt)], [0.0, 5.0], 3, 1)
    serial = sweep(*args, jobs=1)
    parallel = sweep(*args, jobs=2)
    assert serial.to_csv() == parallel.to_csv()


def test_sweep_margin_scaling():
    t = sweep([2], ["zf_ce", "mrt_ce"], [0.0, 5.0, 10.0], 4, 0)
    for m in ("zf_ce", "mrt_ce"):
        for lo, hi in [(0.0, 5.0), (5.0, 10.0)]:
            ratio = t.cell(2, m, hi).mean / t.cell(2, m, lo).mean
            assert ratio == pytest.approx(10 ** 0.25, abs=1e-9)


def test_sweep_unknown_method():
    with pytest.raises(UnknownStrategy):
        sweep([8], ["nope"], [0.0], 1, 0)


def test_feasibility_matrix_broken_and_pipeline():
    broken = ("broken", lambda t: BeamformerMatrix(math.sqrt(2) * mrt(t.H, t.p_max).W))
    fm = feasibility_matrix(1, [broken, "pipeline"], [0.0, 10.0], 3, 0)
    for snr in (0.0, 10.0):
        assert fm.rate("broken", snr) == 0.0
        assert fm.rate("pipeline", snr) == 1.0
    assert all(0.0 <= r <= 1.0 for r in fm.cells.values())


def _mini_table():
    def flaky(theta):
        if theta.seed % 2:
            raise RuntimeError("solver crashed")
        return zf(theta.H, theta.p_max)
    broken = ("broken", lambda t: BeamformerMatrix(2 * mrt(t.H, t.p_max).W))
    return sweep([8], ["zf", "rzf", ("flaky_zf", flaky), broken], [0.0, 10.0], 4, 3)


def test_markdown_golden_and_marks(tmp_path):
    table = _mini_table()
    md = markdown_table(table)
    assert md == (GOLDEN / "mini_table.md").read_text()
    assert "— (4/4)" in md and "*" in md
    for snr in (0.0, 10.0):
        vals = {m: table.cell(8, m, snr).mean for m in table.methods(8)}
        finite = {m: v for m, v in vals.items() if not math.isnan(v)}
        best = max(finite, key=finite.get)
        assert ranking(vals, "max")[0] == best
        assert f"**{vals[best]:.4f}**" in md


def test_emit_report_files(tmp_path):
    table = sweep([8], ["zf", "rzf"], [0.0, 10.0], 2, 3)
    files = emit_report(table, "plotdata", tmp_path)
    assert len(files) == 2
    assert files[0].read_text().splitlines()[0] == "snr_db,mean"
    assert emit_report(table, "csv", tmp_path)[0].name == "metric_table.csv"
    assert emit_report(table, "markdown", tmp_path)[0].name == "metric_table.md"
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(IoError):
        emit_report(table, "csv", blocker / "sub")
    with pytest.raises(ValueError):
        emit_report(MetricTable([]), "csv", tmp_path)
