import json
import math
import os

import pytest

from campaignsim.cli import main, parse_config_file
from campaignsim.feature_space import load_products


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("fx")
    assert main(["fixtures", "--out", str(out)]) == 0
    return out


def run(args):
    return main([str(a) for a in args])


def demo_args(fixture_dir, which="blocking_demo", plans="plans.json"):
    d = fixture_dir / which
    return [
        "--net", d / "edges.txt",
        "--sim", d / "similarity.txt",
        "--products", d / "products.txt",
        "--plans", d / plans,
    ]


# -- fixture generation --------------------------------------------------


def test_fixture_directories_and_contents(fixture_dir):
    for sub in ("preference_shift", "blocking_demo"):
        for name in ("edges.txt", "similarity.txt", "products.txt", "plans.json"):
            assert (fixture_dir / sub / name).exists()
    assert (fixture_dir / "blocking_demo" / "plans_extra_seed.json").exists()


def test_blocking_fixture_has_37_nodes(fixture_dir):
    lines = (fixture_dir / "blocking_demo" / "edges.txt").read_text().splitlines()
    nodes = set()
    for line in lines:
        if line.startswith("#"):
            continue
        a, b, _ = line.split()
        nodes.add(int(a))
        nodes.add(int(b))
    assert max(nodes) + 1 == 37


def test_fixture_products_are_orthogonal(fixture_dir):
    products = load_products(str(fixture_dir / "preference_shift" / "products.txt"))
    dot = sum(a * b for a, b in zip(products[0].features, products[1].features))
    assert math.acos(dot) == pytest.approx(math.pi / 2, abs=1e-12)


def test_fixture_regeneration_is_byte_identical(fixture_dir, tmp_path):
    again = tmp_path / "fx2"
    assert run(["fixtures", "--out", again]) == 0
    for sub in ("preference_shift", "blocking_demo"):
        for name in os.listdir(fixture_dir / sub):
            a = (fixture_dir / sub / name).read_bytes()
            b = (again / sub / name).read_bytes()
            assert a == b, f"{sub}/{name} differs"


# -- simulate ------------------------------------------------------------


def test_simulate_writes_envelope_and_sidecar(fixture_dir, tmp_path):
    out = tmp_path / "sim.json"
    code = run(
        ["simulate", *demo_args(fixture_dir), "--seed", 3, "--reps", 2000, "--out", out]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["command"] == "simulate"
    assert payload["seed"] == 3
    assert payload["results"]["replications"] == 2000
    products = {row["product"]: row for row in payload["results"]["products"]}
    assert products[0]["mean"] == pytest.approx(6.72, abs=0.5)
    meta = json.loads((tmp_path / "sim.json.meta.json").read_text())
    assert "written_at" in meta
    assert "written_at" not in payload


def test_simulate_reruns_are_byte_identical(fixture_dir, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["simulate", *demo_args(fixture_dir), "--seed", 5, "--reps", 1000]
    assert run(args + ["--out", a]) == 0
    assert run(args + ["--out", b]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_simulate_worker_env_override_is_result_neutral(fixture_dir, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["simulate", *demo_args(fixture_dir), "--seed", 5, "--reps", 5000]
    assert run(args + ["--out", a]) == 0
    os.environ["CAMPAIGNSIM_WORKERS"] = "3"
    try:
        assert run(args + ["--out", b]) == 0
    finally:
        del os.environ["CAMPAIGNSIM_WORKERS"]
    assert a.read_bytes() == b.read_bytes()


def test_simulate_optional_outputs(fixture_dir, tmp_path):
    out = tmp_path / "sim.json"
    probs = tmp_path / "probs.csv"
    traj = tmp_path / "traj.csv"
    dump = tmp_path / "aug"
    code = run(
        [
            "simulate", *demo_args(fixture_dir, "preference_shift"),
            "--seed", 1, "--reps", 500, "--out", out,
            "--node-probs", probs, "--trajectory", traj, "--dump-augmented", dump,
        ]
    )
    assert code == 0
    header, *rows = probs.read_text().strip().splitlines()
    assert header == "node,product_0,product_1"
    assert len(rows) == 5  # real nodes only
    t_header, *t_rows = traj.read_text().strip().splitlines()
    assert t_header == "node,activation_time,product"
    assert (dump / "edges.txt").exists()
    assert (dump / "pseudo.json").exists()


def test_missing_input_exits_3(fixture_dir, tmp_path, capsys):
    code = run(
        [
            "simulate", "--net", tmp_path / "absent.txt",
            "--products", fixture_dir / "blocking_demo" / "products.txt",
            "--plans", fixture_dir / "blocking_demo" / "plans.json",
            "--out", tmp_path / "x.json",
        ]
    )
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["type"] == "io"
    assert not (tmp_path / "x.json").exists()


def test_invalid_network_exits_3(fixture_dir, tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0 1 0.8\n2 1 0.8\n")
    code = run(
        [
            "simulate", "--net", bad,
            "--products", fixture_dir / "blocking_demo" / "products.txt",
            "--plans", fixture_dir / "blocking_demo" / "plans.json",
            "--out", tmp_path / "x.json",
        ]
    )
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert "sum to" in err["error"]["message"]


# -- optimize and best-response -----------------------------------------


def ce_config(tmp_path, extra=""):
    cfg = tmp_path / "ce.cfg"
    cfg.write_text("samples = 6\nmax_iterations = 2\nreplications = 200\n" + extra)
    return cfg


def test_optimize_end_to_end(fixture_dir, tmp_path):
    out = tmp_path / "opt.json"
    trace = tmp_path / "trace.csv"
    code = run(
        [
            "optimize", *demo_args(fixture_dir, "preference_shift")[:6],
            "--focal", 0, "--budget", 2.0, "--horizon", 2,
            "--config", ce_config(tmp_path), "--seed", 4,
            "--out", out, "--trace", trace,
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    plan = payload["results"]["plan"]
    assert plan["product"] == 0
    cost = len(plan["seeds"]) + plan["alpha"] + sum(plan["beta"])
    assert cost <= 2.0 + 1e-9
    lines = trace.read_text().strip().splitlines()
    assert lines[0].startswith("iteration,best_value")
    assert len(lines) >= 2


def test_optimize_unknown_config_key_exits_2(fixture_dir, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus = 1\n")
    code = run(
        [
            "optimize", *demo_args(fixture_dir, "preference_shift")[:6],
            "--focal", 0, "--budget", 1.0, "--horizon", 2,
            "--config", cfg, "--seed", 1, "--out", tmp_path / "o.json",
        ]
    )
    assert code == 2
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "config"


def test_optimize_non_numeric_config_value_exits_2(fixture_dir, tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("replications = many\n")
    code = run(
        [
            "optimize", *demo_args(fixture_dir, "preference_shift")[:6],
            "--focal", 0, "--budget", 1.0, "--horizon", 2,
            "--config", cfg, "--seed", 1, "--out", tmp_path / "o.json",
        ]
    )
    assert code == 2


def test_negative_budget_exits_4(fixture_dir, tmp_path, capsys):
    code = run(
        [
            "optimize", *demo_args(fixture_dir, "preference_shift")[:6],
            "--focal", 0, "--budget", -2.0, "--horizon", 2,
            "--seed", 1, "--out", tmp_path / "o.json",
        ]
    )
    assert code == 4
    assert json.loads(capsys.readouterr().err)["error"]["type"] == "infeasible"


def test_best_response_end_to_end(fixture_dir, tmp_path):
    out = tmp_path / "br.json"
    code = run(
        [
            "best-response", *demo_args(fixture_dir, "preference_shift")[:6],
            "--budget", "1.5,1.0", "--rounds", 1, "--horizon", 2,
            "--config", ce_config(tmp_path), "--seed", 8, "--out", out,
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["rounds_run"] == 1
    assert len(payload["results"]["plans"]["plans"]) == 2


def test_best_response_budget_list_must_match(fixture_dir, tmp_path, capsys):
    code = run(
        [
            "best-response", *demo_args(fixture_dir, "preference_shift")[:6],
            "--budget", "1,2,3", "--rounds", 1, "--horizon", 2,
            "--seed", 8, "--out", tmp_path / "br.json",
        ]
    )
    assert code == 2
    code = run(
        [
            "best-response", *demo_args(fixture_dir, "preference_shift")[:6],
            "--budget", "abc", "--rounds", 1, "--horizon", 2,
            "--seed", 8, "--out", tmp_path / "br.json",
        ]
    )
    assert code == 2


# -- oracle and gadget-check --------------------------------------------


def test_oracle_subcommand_reports_agreement(fixture_dir, tmp_path):
    out = tmp_path / "oracle.json"
    code = run(
        [
            "oracle", *demo_args(fixture_dir),
            "--resolution", 50, "--reps", 4000, "--seed", 2, "--out", out,
        ]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    rows = {r["product"]: r for r in payload["results"]["products"]}
    assert rows[0]["oracle_spread"] == pytest.approx(6.72, abs=1e-9)
    assert abs(rows[0]["difference"]) < 5 * rows[0]["engine_stderr"] + 0.05


def test_gadget_check_subcommand(tmp_path):
    out = tmp_path / "gadget.json"
    assert run(["gadget-check", "--trials", 100, "--seed", 1, "--out", out]) == 0
    payload = json.loads(out.read_text())
    assert payload["results"]["counterexamples"] == 0


# -- config file parser --------------------------------------------------


def test_parse_config_file_types_and_comments(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("# comment\nsamples = 20\nelite_frac = 0.2  # inline\nname = abc\n\n")
    parsed = parse_config_file(str(cfg))
    assert parsed == {"samples": 20, "elite_frac": 0.2, "name": "abc"}


def test_parse_config_file_requires_assignment(tmp_path):
    from campaignsim.cli import ConfigError

    cfg = tmp_path / "c.cfg"
    cfg.write_text("just words\n")
    with pytest.raises(ConfigError):
        parse_config_file(str(cfg))


def test_version_flag(capsys):
    # argparse exits for --version; main converts that into a return code
    assert main(["--version"]) == 0
    assert "campaignsim" in capsys.readouterr().out
