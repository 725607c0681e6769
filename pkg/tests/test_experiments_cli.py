import json

import numpy as np
import pytest

from schottky.bergman import BasisSpec, Discretization
from schottky.cli import main
from schottky.covers import identity_cover, sample_symmetric
from schottky.experiments import (ConfigError, ExperimentConfig, NewZeroDeterminant, PreconditionError,
                                  _perm_sign, cover_trial, dense_new_det, ell_for, frequency_trend, net_nodes,
                                  run_cover_experiment, run_tangle_mc)

from conftest import DELTA_REF

K_RECT = [0.26030211890756617, 0.2706042378151324, -0.5, 0.5]


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


def lines(path):
    return [json.loads(x) for x in open(path).read().splitlines()]


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig(rectangle=(1, 0, 0, 1))
    with pytest.raises(ConfigError):
        ExperimentConfig(seed=-1)
    cfg = ExperimentConfig(s=[0.5, 0.25])
    assert cfg.s == 0.5 + 0.25j
    assert ExperimentConfig.from_dict(cfg.to_dict()).s == cfg.s


def test_perm_sign():
    assert _perm_sign(np.array([0, 1, 2])) == 1
    assert _perm_sign(np.array([1, 0, 2])) == -1
    assert _perm_sign(np.array([1, 2, 0])) == 1


def test_net_and_ell():
    re, im = net_nodes(K_RECT, 0.02)
    assert len(re) == 2 and len(im) == 51
    assert np.max(np.diff(im)) <= 0.02 + 1e-15
    assert ell_for(4, 0.5) == 1 and ell_for(1000, 0.5) == 3


@pytest.mark.parametrize("s", [0.3, 0.27 + 0.2j, 0.6 - 0.4j])
def test_sparse_det_matches_dense(data, s):
    disc = Discretization(data, BasisSpec(6, 64))
    smp = sample_symmetric(5, 2, 3)
    a = NewZeroDeterminant(disc, np.asarray(smp.sigma))(s)
    b = dense_new_det(disc, smp, s)
    assert abs(a - b) / abs(b) < 1e-9


def test_identity_cover_repeats_base_zero(data):
    # identity permutations: the new factor is a power of the base determinant
    disc = Discretization(data, BasisSpec(12, 64))
    smp = identity_cover(3, 2)
    s = 0.4 + 0.1j
    triv = np.linalg.det(np.eye(disc.dim) - disc.A_all(s).sum(axis=0))
    assert abs(NewZeroDeterminant(disc, np.asarray(smp.sigma))(s) - triv**2) < 1e-9 * abs(triv) ** 2
    re, im = net_nodes((DELTA_REF - 0.013, DELTA_REF + 0.017, -0.02, 0.02), 0.01)
    res = cover_trial(disc, smp, re, im)
    assert res["new_zero_found"]
    # double zero at delta (it can straddle the real-axis row of cells)
    assert sum(z["winding"] for z in res["zeros"]) == 2
    assert all(abs(z["re"] - DELTA_REF) < 1e-5 and abs(z["im"]) < 1e-6 for z in res["zeros"])


def test_cover_guard(data):
    with pytest.raises(PreconditionError):
        run_cover_experiment(ExperimentConfig(rectangle=(0.1, 0.2, -0.1, 0.1), degree_cap=6, trials=1), data=data)


def test_cover_run_small_and_deterministic(data):
    cfg = ExperimentConfig(rectangle=K_RECT, degree_cap=8, n_values=(4,), trials=3, seed=5)
    rows1, summ1 = run_cover_experiment(cfg, data=data)
    rows2, _ = run_cover_experiment(cfg, threads=2, data=data)
    assert [r["new_zero_found"] for r in rows1] == [r["new_zero_found"] for r in rows2]
    assert [r["min_abs_det"] for r in rows1] == [r["min_abs_det"] for r in rows2]
    assert summ1["net_shape"] == [2, 51] and summ1["per_n"][4]["trials"] == 3
    assert all("event_A" in r for r in rows1)


def test_frequency_trend():
    rows = [{"n": 4, "new_zero_found": t < 10} for t in range(20)] + \
           [{"n": 8, "new_zero_found": t < 2} for t in range(20)] + [{"n": 8, "new_zero_found": None}]
    out = frequency_trend(rows)
    assert out["per_n"][8]["trials"] == 20 and out["nonincreasing_2sigma"]
    rows = [{"n": 4, "new_zero_found": False}] * 50 + [{"n": 8, "new_zero_found": True}] * 50
    assert not frequency_trend(rows)["nonincreasing_2sigma"]


def test_tangle_mc():
    out = run_tangle_mc(ExperimentConfig(n_values=(8, 16), trials=200, seed=1, ell=1))
    f8, f16 = out["per_n"][8]["freq"], out["per_n"][16]["freq"]
    assert 0 < f16 < f8 < 1
    with pytest.raises(PreconditionError):
        run_tangle_mc(ExperimentConfig(n_values=(2,), trials=1, ell=2))


# -- command line --------------------------------------------------------------

def test_cli_validate_and_dim(tmp_path):
    cfg = write(tmp_path, {"schottky": "reference"})
    out = str(tmp_path / "o.jsonl")
    assert main(["validate", cfg, "--out", out]) == 0
    assert lines(out)[0]["ok"]
    assert main(["dim", cfg, "--out", out, "--depth", "12"]) == 0
    assert abs(lines(out)[0]["delta"] - DELTA_REF) < 1e-6


def test_cli_exit_codes(tmp_path, capsys):
    bad = write(tmp_path, {"nope": 1})
    assert main(["validate", bad]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2
    broken = write(tmp_path, {"schottky": "reference", "corrupt_generator": True})
    assert main(["validate", broken]) == 2
    assert main(["identity-suite", broken]) == 3
    assert main(["validate", write(tmp_path, {}), "--seed", str(2**64)]) == 2
    cap = write(tmp_path, {"n_values": [64], "trials": 1, "ell": 4})
    assert main(["norm-trend", cap]) in (0, 4)


def test_cli_cap_exit(tmp_path):
    cfg = write(tmp_path, {"n_values": [40], "trials": 1, "ell": 5, "degree_cap": 2})
    assert main(["decomp-check", cfg]) == 4


def test_cli_identity_suite(tmp_path):
    out = str(tmp_path / "id.jsonl")
    assert main(["identity-suite", write(tmp_path, {"degree_cap": 8}), "--out", out]) == 0
    recs = lines(out)
    assert recs[-1]["summary"]["failed"] == []
    assert all(r["pass"] for r in recs[:-1])


def test_cli_tangle_and_seed_override(tmp_path):
    cfg = write(tmp_path, {"n_values": [8], "trials": 50, "ell": 1, "seed": 0})
    a, b, c = (str(tmp_path / f"{k}.jsonl") for k in "abc")
    main(["tangle-mc", cfg, "--out", a])
    main(["tangle-mc", cfg, "--out", b])
    main(["tangle-mc", cfg, "--out", c, "--seed", "5"])
    assert open(a).read() == open(b).read()
    sa, sc = lines(a)[0]["summary"], lines(c)[0]["summary"]
    assert sc["seed"] == 5 and sc["trials"] == 50
    assert sa["per_n"]["8"]["tangled_count"] != sc["per_n"]["8"]["tangled_count"]


def test_cli_relative_schottky_path(tmp_path):
    discs = [{"center": c, "radius": 1.0} for c in (-6.0, -2.0, 6.0, 2.0)]
    write(tmp_path, {"d": 2, "discs": discs}, "surf.json")
    assert main(["validate", write(tmp_path, {"schottky": "surf.json"})]) == 0
    write(tmp_path, {"d": 2, "discs": [[-6, 1], [-2, 1], [6, 1], [2, 1]]}, "bad.json")
    assert main(["validate", write(tmp_path, {"schottky": "bad.json"}, "cfg2.json")]) == 2
