"""
Verify the desk-scale acceptance numbers of the laboratory
Run from project root: uv run python verify_acceptance.py
"""

import math
from itertools import combinations
import tempfile
from pathlib import Path

import numpy as np
from scipy import stats

from models.enums import BraessMode, TensorizationKind
from schemas.ensemble import DistributionSpec, EnsembleSpec, Seed
from schemas.experiment import ExperimentConfig
from schemas.small_ball import WeightedSumSpec
from services.deloc_service import get_deloc_service
from services.experiment_service import run_experiment
from services.graph_service import get_graph_service
from services.linalg_service import get_linalg_service
from services.small_ball_service import get_small_ball_service

SQRT3 = math.sqrt(3.0)
UNIT_UNIFORM = DistributionSpec.uniform(-0.5, 0.5)


def _mark(ok: bool) -> str:
    return "✅" if ok else "❌"


def verify_acceptance():
    """Run every acceptance check and print one line per criterion"""

    print("=" * 60)
    print("Acceptance Verification")
    print("=" * 60)

    linalg = get_linalg_service()
    deloc = get_deloc_service()
    small_ball = get_small_ball_service()
    graphs = get_graph_service()
    rng = np.random.default_rng(0)
    results = {}

    try:
        print("\n1. Density of the normalized two-uniform sum at 0...")
        w = 1.0 / math.sqrt(2.0)
        curve = small_ball.weighted_sum_density(WeightedSumSpec(dists=[UNIT_UNIFORM] * 2, weights=[w, w]), [0.0])
        results[1] = abs(curve.values[0] - math.sqrt(2.0)) <= 1e-3
        print(f"   {_mark(results[1])} f(0) = {curve.values[0]:.6f}")

        print("\n2. Negative second moment identity...")
        gaps = [linalg.negative_second_moment_audit(rng.normal(size=shape)).relative_gap
                for shape in [(12, 8), (20, 10), (30, 30)] for _ in range(100)]
        results[2] = max(gaps) <= 1e-8
        print(f"   {_mark(results[2])} worst relative gap {max(gaps):.2e} over {len(gaps)} instances")

        print("\n3. Row-split decomposition bound...")
        audits = [linalg.decomposition_bound_audit(rng.normal(size=(8, 6)), 4, 1.0) for _ in range(50)]
        held = sum(a.holds for a in audits)
        results[3] = held == 50
        print(f"   {_mark(results[3])} {held}/50 instances")

        print("\n4. Sorted min_mass against exhaustive subsets...")
        agree = 0
        for _ in range(200):
            n = int(rng.integers(2, 13))
            v = rng.normal(size=n)
            v /= np.linalg.norm(v)
            k = int(rng.integers(1, n + 1))
            brute = min(math.sqrt(sum(v[list(c)] ** 2)) for c in combinations(range(n), k))
            agree += abs(deloc.min_mass(v, k / n).mass - brute) <= 1e-12
        results[4] = agree == 200
        print(f"   {_mark(results[4])} {agree}/200 vectors")

        print("\n5-6. No-gaps and sup-norm survey (n = 400, 50 trials)...")
        spec = EnsembleSpec(n=400, symmetry="symmetric", entry=DistributionSpec.uniform(-SQRT3, SQRT3))
        survey = deloc.deloc_survey(spec, 50, [0.1, 0.25, 0.5], master_seed=1, eps=0.1, delta=1e-4)
        s = survey.summary
        results[5] = s.min_mass[0] >= 0.005 and s.localized_trials == 0
        results[6] = s.max_linf <= 0.35
        print(f"   {_mark(results[5])} min_mass(0.1) = {s.min_mass[0]:.4f}, localized {s.localized_trials}/50")
        print(f"   {_mark(results[6])} max sup norm = {s.max_linf:.4f}")

        print("\n7. Superlevel sets of the characteristic function...")
        grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95]
        reports = [small_ball.superlevel_measure(UNIT_UNIFORM, t) for t in grid]
        results[7] = all(r.applicable_holds for r in reports)
        print(f"   {_mark(results[7])} measure at t=0.9: {reports[10].measure:.4f}")

        print("\n8. Tensorization audits (10^6 samples)...")
        t_grid = [0.0, 0.05, 0.1, 0.15, 0.2, 0.25]
        rows = [row for kind in TensorizationKind
                for row in small_ball.tensorization_audit(kind, t_grid, samples=1_000_000, master_seed=1)]
        results[8] = all(row.holds for row in rows)
        print(f"   {_mark(results[8])} {sum(r.holds for r in rows)}/{len(rows)} grid points")

        print("\n9. Small ball of ||Gx|| against chi-square...")
        report = small_ball.small_ball_Gx(4, 3, DistributionSpec.gaussian(), np.array([1.0, 0.0, 0.0]), 0.5,
                                          trials=10_000, master_seed=1)
        results[9] = abs(report.empirical - 0.0902) <= 0.01
        print(f"   {_mark(results[9])} empirical {report.empirical:.4f}, "
              f"chi-square {stats.chi2.cdf(1.0, 4):.4f}")

        print("\n10. Nodal domains of G(200, 0.5), 20 seeds...")
        _, nodal = graphs.nodal_survey(200, 0.5, trials=20, master_seed=1)
        results[10] = nodal.two_domain_fraction >= 0.99
        print(f"   {_mark(results[10])} two-domain fraction {nodal.two_domain_fraction:.4f}")

        print("\n11. Braess fraction on G(100, 0.5), 5 samples...")
        fractions = [graphs.a_minus(graphs.sample_gnp(100, 0.5, Seed(master=1, trial_index=t)),
                                    mode=BraessMode.EXACT).a_minus for t in range(5)]
        results[11] = all(0.35 <= f <= 0.65 for f in fractions)
        print(f"   {_mark(results[11])} a_minus = {', '.join(f'{f:.3f}' for f in fractions)}")

        print("\n12. G(300, 0.5) property audit, 20 seeds...")
        passed = sum(graphs.gnp_property_audit(graphs.sample_gnp(300, 0.5, Seed(master=1, trial_index=t)),
                                               seed=t).exact_items_hold for t in range(20))
        results[12] = passed >= 19
        print(f"   {_mark(results[12])} {passed}/20 seeds")

        print("\n13. Levy estimator calibration...")
        uniform = small_ball.levy_concentration(rng.uniform(-0.5, 0.5, 100_000), 0.25)
        gaussian = small_ball.levy_concentration(rng.normal(size=100_000), 1.0)
        results[13] = abs(uniform - 0.5) <= 0.02 and abs(gaussian - 0.6827) <= 0.01
        print(f"   {_mark(results[13])} uniform {uniform:.4f}, gaussian {gaussian:.4f}")

        print("\n14. Byte-identical CSVs under 1, 2 and 8 threads...")
        configs = [
            {"experiment": "deloc_survey", "master_seed": 5, "trials": 4, "eps_grid": [0.1, 0.5],
             "ensemble": {"n": 400, "symmetry": "symmetric", "entry": {"kind": "uniform", "a": -SQRT3, "b": SQRT3}}},
            {"experiment": "nodal", "master_seed": 5, "trials": 2, "graph": {"n": 200, "p": 0.5}},
            {"experiment": "braess", "master_seed": 5, "graph": {"n": 100, "p": 0.5}},
            {"experiment": "graph_audit", "master_seed": 5, "trials": 2, "graph": {"n": 300, "p": 0.5}},
        ]
        identical = True
        with tempfile.TemporaryDirectory() as tmp:
            for index, data in enumerate(configs):
                config = ExperimentConfig.model_validate(data)
                outputs = []
                for threads in (1, 2, 8):
                    out = Path(tmp) / f"{index}_{threads}"
                    manifest = run_experiment(config, output_dir=str(out), threads=threads)
                    outputs.append({name: (out / name).read_bytes() for name in manifest.row_counts})
                identical &= outputs[0] == outputs[1] == outputs[2]
        results[14] = identical
        print(f"   {_mark(results[14])} {len(configs)} configs")

        print("\n" + "=" * 60)
        failed = [k for k, ok in results.items() if not ok]
        if failed:
            print(f"❌ Failed criteria: {failed}")
        else:
            print("✅ All acceptance criteria hold!")
        print("=" * 60)

    except Exception as e:
        print("\n" + "=" * 60)
        print(f"❌ Acceptance verification failed: {e}")
        print("=" * 60)
        import traceback
        traceback.print_exc()


if __name__ == "__main__":
    verify_acceptance()
