import csv
import json
import subprocess
import sys

import pytest

from multirenorm import cli, combinatorics as comb, tuner
from multirenorm.errors import ConfigError, ParseError


def _report(out, command):
    return json.loads((out / f"{command}.json").read_text())


def test_analyze_b_star(tmp_path):
    assert cli.main(["analyze", "--b", "-1.618034", "--out", str(tmp_path)]) == 0
    rep = _report(tmp_path, "analyze")
    assert rep["schema"] == "v1"
    assert rep["payload"]["p"] == 2
    assert rep["payload"]["combinatorics"] == comb.M2.canonical
    assert rep["provenance"]["precision_bits"] == 53
    meta = json.loads((tmp_path / "analyze.meta.json").read_text())
    assert meta["status"] == 0 and "seconds" in meta


def test_delta_csv(tmp_path):
    assert cli.run("delta", cli.RunConfig(n_max=8, out=str(tmp_path))) == 0
    rows = list(csv.DictReader((tmp_path / "delta.csv").open()))
    assert [int(r["n"]) for r in rows] == list(range(3, 9))
    assert abs(float(rows[-1]["delta_n"]) - 4.6692) / 4.6692 < 0.01


def test_malformed_word_exits_two(tmp_path, capsys):
    assert cli.main(["tune", "--word", "v1;N=1;garbage", "--out", str(tmp_path)]) == 2
    assert "parse: invalid canonical combinatorics" in capsys.readouterr().err
    rep = _report(tmp_path, "tune")
    assert rep["error"]["kind"] == "input" and rep["payload"] is None


def test_domain_error_exits_one(tmp_path):
    assert cli.main(["analyze", "--b", "-2", "--out", str(tmp_path)]) == 1
    assert _report(tmp_path, "analyze")["error"]["kind"]


def test_missing_b_is_config_error(tmp_path):
    assert cli.run("tower", cli.RunConfig(out=str(tmp_path))) == 2


def test_unknown_command():
    with pytest.raises(ConfigError):
        cli.run("bogus", cli.RunConfig())


@pytest.mark.parametrize("kw", [dict(depth=-1), dict(max_period=1), dict(precision_bits=8),
                                dict(n_max=2), dict(eta=1.0), dict(b=(float("nan"),))])
def test_config_ranges(kw):
    with pytest.raises(ConfigError):
        cli.RunConfig(**kw)


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nb = -1.7, -1.3\ndepth = 5\nmax_period = none\neta = 10\n")
    vals = cli.load_config(path)
    assert vals == {"b": (-1.7, -1.3), "depth": 5, "max_period": None, "eta": 10.0}
    path.write_text("colour = blue\n")
    with pytest.raises(ConfigError, match="unknown config key"):
        cli.load_config(path)
    path.write_text("depth = deep\n")
    with pytest.raises(ConfigError):
        cli.load_config(path)


def test_flags_override_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("b = -1.618034\ndepth = 3\n")
    ns = cli.build_parser().parse_args(["nest", "--config", str(path), "--depth", "4"])
    cfg = cli.config_from_args(ns)
    assert cfg.b == (-1.618034,) and cfg.depth == 4


def test_parse_word_forms():
    assert cli.parse_word("M2^3") == [comb.M2] * 3
    assert cli.parse_word("M2") == [comb.M2]
    M3 = comb.enumerate_combinatorics(1, 3)[0]
    assert cli.parse_word(f"{comb.M2.canonical}*{M3.canonical}") == [comb.M2, M3]
    with pytest.raises(ParseError):
        cli.parse_word("M2^0")


def test_cache_hit_miss_and_corruption(tmp_path, caplog):
    word = [comb.M2] * 5
    spec = tuner.FamilySpec.unit(1)
    assert cli.cache_lookup(str(tmp_path), word, spec) is None
    res = tuner.superstable_parameter(spec, word)
    cli.cache_store(str(tmp_path), word, spec, res)
    hit = cli.cache_lookup(str(tmp_path), word, spec)
    assert hit is not None and hit.b == res.b
    assert cli.cache_lookup(str(tmp_path), word, tuner.FamilySpec.unit(1, 113)) is None
    path, _ = cli._cache_path(str(tmp_path), word, spec)
    with open(path, "w") as fh:
        fh.write("{not json")
    assert cli.cache_lookup(str(tmp_path), word, spec) is None
    assert "corrupt cache entry" in caplog.text


def test_repeated_tune_hits_cache(tmp_path):
    cache = tmp_path / "cache"
    args = ["tune", "--word", "M2^5", "--cache-dir", str(cache)]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert len(list(cache.glob("*.json"))) == 1
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    a, b = _report(tmp_path / "a", "tune"), _report(tmp_path / "b", "tune")
    assert a["payload"]["result"]["b"] == b["payload"]["result"]["b"]


def test_combinatorics_command(tmp_path):
    assert cli.run("combinatorics", cli.RunConfig(n_type=1, m=6, out=str(tmp_path))) == 0
    p = _report(tmp_path, "combinatorics")["payload"]
    assert p["count"] == 5 and p["primitive"] == 3  # M2*M3 and M3*M2 are composite
    assert cli.main(["combinatorics", "--word", "M2^2", "--out", str(tmp_path)]) == 0
    p = _report(tmp_path, "combinatorics")["payload"]
    assert p["factorizations"] == [[comb.M2.canonical] * 2] and not p["primitive"]


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "multirenorm", "external", "--b", "-1.5",
                          "--out", str(tmp_path)], capture_output=True, text=True)
    assert out.returncode == 0, out.stderr
    assert _report(tmp_path, "external")["payload"]["winding"] == 2
