"""Acceptance suite: one test per shipped guarantee.

Each test prints a single `criterion N (...): PASS` / `FAIL` line so the
whole gate can be read at a glance (`pytest tests/test_acceptance.py -v -s`).
Every check recomputes its expectation independently of the library code
(pure-python brute force, finite differences, quadrature) or pins an exact
invariant.
"""

import contextlib
import json
import math
import time

import numpy as np
from numpy.testing import assert_allclose

from thermofault import (
    Episode,
    ExperimentConfig,
    FeatureGrid,
    KdeEstimator,
    anchored_histogram,
    build_model,
    extract_region,
    feature_vector,
    histogram,
    init_mlp,
    interval_probability,
    kde_at,
    kde_values,
    posterior,
    proto_loss,
    refine_centers,
    run_both,
    silverman_bandwidth,
    synthesize,
)
from thermofault.cli import main
from thermofault.synthetic import (
    case_study_config,
    default_synth_config,
    separable_synth_config,
)
from thermofault.taxonomy import SUBCATEGORIES, EquipmentType, Status


@contextlib.contextmanager
def criterion(num: int, label: str):
    try:
        yield
    except BaseException:
        print(f"criterion {num} ({label}): FAIL", flush=True)
        raise
    print(f"criterion {num} ({label}): PASS", flush=True)


# ------------------------------------------------------------- criterion 1

def test_criterion_1_kde_integral_and_brute_force():
    with criterion(1, "kde integrates to 1 and matches brute force"):
        rng = np.random.Generator(np.random.PCG64(101))
        start = time.perf_counter()
        for trial in range(100):
            n = int(rng.integers(2, 501))
            loc = float(rng.uniform(-30.0, 60.0))
            scale = float(rng.uniform(0.3, 6.0))
            if trial % 3 == 0:
                x = rng.uniform(loc, loc + 10.0 * scale, size=n)
            else:
                x = rng.normal(loc, scale, size=n)
            w = silverman_bandwidth(x)
            est = KdeEstimator(x, w)

            grid = np.linspace(x.min() - 8.0 * w, x.max() + 8.0 * w, 4001)
            integral = float(np.trapezoid(kde_values(est, grid), grid))
            assert abs(integral - 1.0) < 1e-6, f"trial {trial}: integral {integral}"

            norm = n * w * math.sqrt(2.0 * math.pi)
            for p in rng.uniform(grid[0], grid[-1], size=4):
                brute = math.fsum(math.exp(-0.5 * ((p - xi) / w) ** 2) for xi in x) / norm
                assert abs(kde_at(est, float(p)) - brute) < 1e-12
        assert time.perf_counter() - start < 10.0


# ------------------------------------------------------------- criterion 2

def test_criterion_2_histogram_cdf_difference_identity():
    with criterion(2, "histogram sums to 1, interval difference identity exact"):
        # worked example with the maximum sitting exactly on a bin edge
        h = anchored_histogram([1.0, 1.0, 2.0, 3.0], bin_width=1.0)
        edges = h.bin_edges()
        assert h.probs.sum() == 1.0
        assert interval_probability(h, float(edges[0]), float(edges[-1])) == 1.0

        rng = np.random.Generator(np.random.PCG64(202))
        for trial in range(200):
            n = int(rng.integers(1, 400))
            if trial % 2 == 0:
                x = rng.normal(rng.uniform(0.0, 40.0), rng.uniform(0.5, 5.0), size=n)
            else:
                x = rng.integers(0, 30, size=n).astype(np.float64)
            width = float(rng.uniform(0.25, 2.5))
            if trial % 4 < 2:
                h = anchored_histogram(x, bin_width=width)
            else:
                h = histogram(x, bin_origin=float(rng.uniform(-1.0, 1.0)), bin_width=width)

            total = float(h.probs.sum())
            assert abs(total - 1.0) <= 1e-12

            edges = h.bin_edges()
            t_min = float(edges[0])
            full = interval_probability(h, t_min, float(edges[-1]))
            assert full == total  # same summation, bit for bit
            assert abs(full - 1.0) <= 1e-12

            for _ in range(8):
                a, b = np.sort(rng.uniform(t_min, float(edges[-1]) + width, size=2))
                lhs = interval_probability(h, float(a), float(b))
                rhs = interval_probability(h, t_min, float(b)) - interval_probability(
                    h, t_min, float(a)
                )
                assert lhs == rhs  # exact, not approximate

        # anchored histogram of continuous data: sample min/max span everything
        x = rng.normal(20.0, 3.0, size=257)
        h = anchored_histogram(x)
        assert interval_probability(h, float(x.min()), float(x.max())) == float(h.probs.sum())


# ------------------------------------------------------------- criterion 3

def _brute_centers(labeled):
    classes = [s for s in SUBCATEGORIES if any(t is s for t, _ in labeled)]
    centers = []
    for s in classes:
        vecs = [v for t, v in labeled if t is s]
        dim = len(vecs[0])
        centers.append([math.fsum(v[j] for v in vecs) / len(vecs) for j in range(dim)])
    return classes, centers


def _brute_refined(classes, centers, unlabeled, alpha):
    assigned = [[] for _ in classes]
    for u in unlabeled:
        dists = [math.fsum((u[j] - c[j]) ** 2 for j in range(len(c))) for c in centers]
        best = min(range(len(classes)), key=lambda i: (dists[i], i))
        assigned[best].append(u)
    refined = []
    for i, c in enumerate(centers):
        if assigned[i]:
            mean = [
                math.fsum(u[j] for u in assigned[i]) / len(assigned[i])
                for j in range(len(c))
            ]
            refined.append([alpha * c[j] + (1.0 - alpha) * mean[j] for j in range(len(c))])
        else:
            refined.append(list(c))
    return refined


def _brute_posterior(v, centers):
    d = [math.sqrt(math.fsum((v[j] - c[j]) ** 2 for j in range(len(c)))) for c in centers]
    m = min(d)
    e = [math.exp(-(di - m)) for di in d]
    z = math.fsum(e)
    return d, [ei / z for ei in e]


def test_criterion_3_prototype_brute_force_equivalence():
    with criterion(3, "prototype pipeline matches brute force on small instances"):
        rng = np.random.Generator(np.random.PCG64(303))
        for n_classes in (2, 3, 4):
            for dim in (1, 2, 3):
                for n_unlabeled in range(7):
                    for alpha in (0.0, 0.35, 1.0):
                        labeled = []
                        for i in range(n_classes):
                            for _ in range(1 + (i + n_unlabeled) % 2):
                                labeled.append(
                                    (SUBCATEGORIES[i], rng.normal(size=dim) * 2.0)
                                )
                        unlabeled = rng.normal(size=(n_unlabeled, dim)) * 2.0

                        model = refine_centers(
                            build_model(labeled, alpha=alpha), unlabeled
                        )
                        classes, centers = _brute_centers(labeled)
                        refined = _brute_refined(
                            classes, centers, [list(u) for u in unlabeled], alpha
                        )

                        assert tuple(classes) == model.classes
                        assert np.abs(model.centers_labeled - np.array(centers)).max() <= 1e-12
                        assert np.abs(model.centers_refined - np.array(refined)).max() <= 1e-12
                        if alpha == 1.0:
                            assert (model.centers_refined == model.centers_labeled).all()

                        probe = rng.normal(size=dim) * 2.0
                        p = posterior(probe, model)
                        d, probs = _brute_posterior(list(probe), refined)
                        assert np.abs(p.distances - np.array(d)).max() <= 1e-12
                        assert np.abs(p.probs - np.array(probs)).max() <= 1e-12
                        order = sorted(d)
                        if len(order) < 2 or order[1] - order[0] > 1e-9:
                            best = min(range(len(d)), key=lambda i: (d[i], i))
                            assert p.predicted == classes[best]

        # forced empty assignment: every unlabeled vector sits at class 0
        labeled = [
            (SUBCATEGORIES[0], np.array([0.0])),
            (SUBCATEGORIES[1], np.array([10.0])),
            (SUBCATEGORIES[2], np.array([20.0])),
        ]
        unlabeled = np.array([[0.1], [-0.2], [0.3]])
        model = refine_centers(build_model(labeled, alpha=0.25), unlabeled)
        assert model.centers_refined[1, 0] == 10.0
        assert model.centers_refined[2, 0] == 20.0
        expect = 0.25 * 0.0 + 0.75 * np.mean([0.1, -0.2, 0.3])
        assert abs(model.centers_refined[0, 0] - expect) <= 1e-12


# ------------------------------------------------------------- criterion 4

def test_criterion_4_posterior_invariants():
    with criterion(4, "posterior invariants over 1000 random cases"):
        rng = np.random.Generator(np.random.PCG64(404))
        strict_checked = 0
        for case in range(1000):
            k = int(rng.integers(2, 11))
            dim = int(rng.integers(1, 9))
            centers = rng.normal(size=(k, dim)) * 3.0
            classes = SUBCATEGORIES[:k]
            model = build_model(
                [(s, centers[i]) for i, s in enumerate(classes)], alpha=1.0
            )
            v = rng.normal(size=dim) * 3.0
            p = posterior(v, model)

            assert abs(p.probs.sum() - 1.0) <= 1e-12
            i_min = int(np.argmin(p.distances))
            assert p.predicted == p.classes[i_min]
            assert p.probs[i_min] == p.probs.max()

            if case % 20 == 0:
                # exact tie between the first two classes: lowest index wins
                probe = centers[i_min]
                pairs = [(classes[0], probe.copy()), (classes[1], probe.copy())]
                for j in range(2, k):
                    away = probe.copy()
                    away[0] += float(j)
                    pairs.append((classes[j], away))
                t = posterior(probe, build_model(pairs, alpha=1.0))
                assert t.distances[0] == t.distances[1] == 0.0
                assert t.predicted == classes[0]

            shift = rng.normal(size=dim) * 10.0
            shifted = build_model(
                [(s, centers[i] + shift) for i, s in enumerate(classes)], alpha=1.0
            )
            q = posterior(v + shift, shifted)
            assert_allclose(q.probs, p.probs, rtol=1e-9, atol=1e-12)
            gap = np.sort(p.distances)
            if gap[1] - gap[0] > 1e-6:
                strict_checked += 1
                assert q.predicted == p.predicted
        assert strict_checked >= 950


# ------------------------------------------------------------- criterion 5

def _finite_difference_grads(e, ep, delta=1e-5):
    grads = {}
    for name in ("W1", "b1", "W2", "b2"):
        param = getattr(e, name)
        g = np.zeros_like(param)
        it = np.nditer(param, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            saved = param[idx]
            param[idx] = saved + delta
            lp, _ = proto_loss(e, ep)
            param[idx] = saved - delta
            lm, _ = proto_loss(e, ep)
            param[idx] = saved
            g[idx] = (lp - lm) / (2 * delta)
            it.iternext()
        grads[name] = g
    return grads


def test_criterion_5_gradient_check():
    with criterion(5, "analytic gradients match central differences"):
        rng = np.random.Generator(np.random.PCG64(505))
        start = time.perf_counter()
        worst = 0.0
        for _ in range(50):
            g = int(rng.integers(2, 9))
            hidden = int(rng.integers(2, 6))
            d = int(rng.integers(1, 5))
            e = init_mlp(g, hidden, d, seed=int(rng.integers(0, 100_000)))
            n_classes = int(rng.integers(2, 4))
            support = tuple(
                (SUBCATEGORIES[i], rng.normal(size=g))
                for i in range(n_classes)
                for _ in range(int(rng.integers(1, 3)))
            )
            query = tuple(
                (SUBCATEGORIES[int(rng.integers(0, n_classes))], rng.normal(size=g))
                for _ in range(2)
            )
            ep = Episode(support=support, query=query)
            _, analytic = proto_loss(e, ep)
            numeric = _finite_difference_grads(e, ep)
            for name in ("W1", "b1", "W2", "b2"):
                a, n = analytic[name], numeric[name]
                # central differences at delta=1e-5 carry ~1e-11 roundoff, so
                # entries below 1e-6 (e.g. the exactly-zero b2 gradients) are
                # compared absolutely at that scale rather than relatively
                err = np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-6)
                worst = max(worst, float(err.max()))
        assert worst < 1e-4, f"worst relative gradient error {worst}"
        assert time.perf_counter() - start < 30.0


# ------------------------------------------------------------- criterion 6

def test_criterion_6_weak_supervision_benefit():
    with criterion(6, "weak mode beats supervised over 20 seeds"):
        start = time.perf_counter()
        deltas = []
        for seed in range(20):
            cfg = ExperimentConfig(
                synth=default_synth_config(seed=seed), seed=seed, alpha=0.5
            )
            sup, weak = run_both(cfg)
            assert sup.overall.n_normal + sup.overall.n_fault == 100
            deltas.append(weak.overall.acc_average - sup.overall.acc_average)
        wins = sum(d >= 0.0 for d in deltas)
        mean_delta = float(np.mean(deltas))
        assert mean_delta > 0.0, f"mean delta {mean_delta:+.4f}"
        assert wins >= 13, f"weak >= supervised in only {wins}/20 seeds"
        assert time.perf_counter() - start < 120.0


# ------------------------------------------------------------- criterion 7

def test_criterion_7_separable_sanity():
    with criterion(7, "both modes perfect on well-separated classes"):
        for seed in range(5):
            cfg = ExperimentConfig(
                synth=separable_synth_config(seed=seed), seed=seed, alpha=0.5
            )
            sup, weak = run_both(cfg)
            assert sup.overall.acc_average == 1.0
            assert weak.overall.acc_average == 1.0


# ------------------------------------------------------------- criterion 8

def test_criterion_8_case_study_mode_ordering():
    with criterion(8, "fault density mode sits above the normal mode"):
        grid = FeatureGrid(t_lo=0.0, t_hi=60.0, n_points=601)
        pts = grid.points()
        for etype in (EquipmentType.ARRESTER, EquipmentType.BUSHING):
            for seed in range(10):
                images, manifest = synthesize(case_study_config(etype, seed=seed))
                by_id = {img.source_id: img for img in images}
                mode = {}
                for status in (Status.NORMAL, Status.FAULT):
                    vecs = [
                        feature_vector(
                            extract_region(by_id[r.image_ref], r.bbox).ravel(), grid
                        ).values
                        for r in manifest.labeled + manifest.test
                        if r.status is status
                    ]
                    mode[status] = float(pts[int(np.argmax(np.mean(vecs, axis=0)))])
                assert mode[Status.FAULT] > mode[Status.NORMAL], (
                    f"{etype.value} seed {seed}: fault mode {mode[Status.FAULT]}"
                    f" not above normal mode {mode[Status.NORMAL]}"
                )


# ------------------------------------------------------------- criterion 9

def test_criterion_9_cli_chain_determinism(tmp_path):
    with criterion(9, "repeated CLI chain is byte-identical"):
        data = tmp_path / "data"
        run = tmp_path / "run"

        exp = ExperimentConfig(
            manifest_path=str(data / "manifest.json"), seed=3, alpha=0.5
        )
        exp_path = tmp_path / "exp.json"
        exp_path.write_text(json.dumps(exp.to_dict(), sort_keys=True, indent=2))

        def run_chain() -> dict[str, bytes]:
            steps = [
                ["synth", "--out", str(data), "--seed", "11"],
                [
                    "extract",
                    "--manifest", str(data / "manifest.json"),
                    "--out", str(run / "features.json"),
                ],
                [
                    "train",
                    "--features", str(run / "features.json"),
                    "--out", str(run / "model.json"),
                    "--mode", "weak", "--alpha", "0.5", "--seed", "0",
                ],
                [
                    "classify",
                    "--model", str(run / "model.json"),
                    "--features", str(run / "features.json"),
                    "--out", str(run / "predictions.json"),
                ],
                [
                    "eval",
                    "--config", str(exp_path),
                    "--out", str(run / "reports"),
                    "--mode", "both",
                ],
            ]
            for argv in steps:
                assert main(argv) == 0, f"step failed: {argv[0]}"
            return {
                str(p.relative_to(tmp_path)): p.read_bytes()
                for p in sorted(tmp_path.rglob("*"))
                if p.is_file()
            }

        first = run_chain()
        second = run_chain()
        assert first.keys() == second.keys()
        diff = [k for k in first if first[k] != second[k]]
        assert not diff, f"artifacts differ between runs: {diff}"
        assert any(k.endswith("predictions.json") for k in first)
        assert any("report_weak" in k for k in first)
