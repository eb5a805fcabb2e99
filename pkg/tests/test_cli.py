import csv
import json
from importlib import resources

import numpy as np
import pytest

from plasmonhom.cli import main
from plasmonhom.tagfile import read_htag

SHIPPED_CFG = (resources.files("plasmonhom") / "data" / "paper_plasmonic.cfg").read_text()
FIT_FIELDS = {"n_max", "visibility", "sigma_visibility", "delta_omega", "coherence_time_ps",
              "delay_offset_ps", "chi2_reduced", "verdict"}


def variant(tmp_path, name, **overrides):
    """Shipped plasmonic config with some keys replaced."""
    lines = []
    for line in SHIPPED_CFG.splitlines():
        key = line.split("=", 1)[0].strip()
        if key in overrides:
            line = f"{key} = {overrides.pop(key)}"
        lines.append(line)
    lines += [f"{k} = {v}" for k, v in overrides.items()]
    p = tmp_path / f"{name}.cfg"
    p.write_text("\n".join(lines) + "\n")
    return p


def scaled(tmp_path, name="scaled", **kw):
    # same splitter, overlap and singles; 1000x the coincidence rate so 30 s per delay suffices
    kw.setdefault("target_coincidence_cph", 37700)
    kw.setdefault("duration", "30s")
    return variant(tmp_path, name, **kw)


def run_scan(tmp_path, cfg, name):
    tags, res = tmp_path / f"{name}_tags", tmp_path / f"{name}_res"
    assert main(["simulate", "--config", str(cfg), "--out", str(tags), "--no-plots"]) == 0
    return tags, res


class TestSimulate:
    def test_shipped_default_file_count(self, tmp_path):
        out = tmp_path / "tags"
        rc = main(["simulate", "--config", "paper_plasmonic", "--out", str(out),
                   "--duration", "1ms", "--no-plots"])
        assert rc == 0
        names = sorted(p.name for p in out.glob("*.htag"))
        assert names == sorted(f"tags_d{i}.htag" for i in range(21))
        meta = json.loads((out / "tags_d0.json").read_text())
        assert meta["seed"] == 808 and meta["delay_s"] == pytest.approx(-0.15e-12)

    def test_silent_config(self, tmp_path):
        cfg = variant(tmp_path, "silent", profile="photonic", pair_rate=0, target_singles_cph=0,
                      target_coincidence_cph=0, scan_points=3)
        out = tmp_path / "tags"
        assert main(["simulate", "--config", str(cfg), "--out", str(out), "--no-plots"]) == 0
        files = sorted(out.glob("*.htag"))
        assert len(files) == 3
        assert all(len(read_htag(f)) == 0 for f in files)

    def test_rerun_byte_identical(self, tmp_path):
        args = ["simulate", "--config", "paper_photonic", "--duration", "0.5s", "--no-plots"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b"), "--jobs", "2"]) == 0
        for fa in sorted((tmp_path / "a").iterdir()):
            assert fa.read_bytes() == (tmp_path / "b" / fa.name).read_bytes()
        assert main(args + ["--out", str(tmp_path / "c"), "--seed", "405"]) == 0
        assert (tmp_path / "a" / "tags_d0.htag").read_bytes() != (tmp_path / "c" / "tags_d0.htag").read_bytes()

    def test_config_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.cfg"
        bad.write_text("profile = plasmonic\nwindow = -2ns\n")
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "config error" in capsys.readouterr().err
        bad.write_text("profile = plasmonic\nwindw = 2ns\n")
        assert main(["simulate", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
        assert "bad.cfg:2" in capsys.readouterr().err


class TestAnalyze:
    def test_calibrated_scan_visibility(self, tmp_path):
        tags, res = run_scan(tmp_path, scaled(tmp_path), "q")
        assert main(["analyze", str(tags), "--out", str(res), "--assert-quantum"]) == 0
        fit = json.loads((res / "fit.json").read_text())
        assert FIT_FIELDS <= set(fit)
        assert abs(fit["visibility"] - 0.72) < 0.07
        assert fit["verdict"] == "quantum"
        assert (res / "dip.png").stat().st_size > 0
        with open(res / "dip.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert list(rows[0]) == ["delay_ps", "rate_cph", "sigma_cph", "raw_cph", "accidental_cph"]
        assert len(rows) == 21
        delays = [float(r["delay_ps"]) for r in rows]
        assert delays == sorted(delays)

    def test_distinguishable_scan(self, tmp_path):
        tags, res = run_scan(tmp_path, scaled(tmp_path, mode_overlap=0), "d")
        assert main(["analyze", str(tags), "--out", str(res), "--no-plots", "--assert-quantum"]) == 4
        fit = json.loads((res / "fit.json").read_text())
        assert abs(fit["visibility"]) < 3 * fit["sigma_visibility"]

    def test_classical_source(self, tmp_path):
        tags, res = run_scan(tmp_path, scaled(tmp_path, source="classical"), "c")
        assert main(["analyze", str(tags), "--out", str(res), "--no-plots"]) == 0
        fit = json.loads((res / "fit.json").read_text())
        assert fit["visibility"] <= 0.5 + 3 * fit["sigma_visibility"]
        assert fit["verdict"] == "classical-compatible"

    def test_corrupt_magic(self, tmp_path, capsys):
        out = tmp_path / "tags"
        main(["simulate", "--config", "paper_photonic", "--duration", "10ms", "--out", str(out), "--no-plots"])
        f = out / "tags_d3.htag"
        f.write_bytes(b"XXXX" + f.read_bytes()[4:])
        assert main(["analyze", str(out), "--out", str(tmp_path / "r"), "--no-plots"]) == 3
        assert "magic" in capsys.readouterr().err

    def test_missing_input(self, tmp_path):
        assert main(["analyze", str(tmp_path / "nothing"), "--out", str(tmp_path / "r")]) == 3

    def test_failed_fit_still_writes_report(self, tmp_path):
        cfg = variant(tmp_path, "few", profile="photonic", pair_rate=1e4, target_singles_cph=0,
                      target_coincidence_cph=0, scan_points=3, duration="1s")
        tags, res = run_scan(tmp_path, cfg, "few")
        assert main(["analyze", str(tags), "--out", str(res), "--no-plots"]) == 0
        fit = json.loads((res / "fit.json").read_text())
        assert fit["visibility"] is None and "fit_error" in fit
        assert main(["analyze", str(tags), "--out", str(res), "--no-plots", "--assert-quantum"]) == 4


class TestCharacterize:
    def test_bragg_and_propagation(self, tmp_path):
        bragg = tmp_path / "bragg.csv"
        bragg.write_text("wavelength_nm,transmission\n780,0.44\n808,0.49\n840,0.55\n")
        prop = tmp_path / "prop.csv"
        x = np.array([5.0, 10.0, 15.0, 20.0, 25.0])
        prop.write_text("length_um,intensity\n" + "".join(
            f"{a:.17g},{b:.17g}\n" for a, b in zip(x, 800 * np.exp(-x / 12.4))))
        out = tmp_path / "char"
        assert main(["characterize", "--bragg", str(bragg), "--propagation", str(prop),
                     "--out", str(out)]) == 0
        res = json.loads((out / "characterization.json").read_text())
        assert res["T"] == pytest.approx(0.49) and res["R"] == pytest.approx(0.51)
        assert res["propagation_length_um"] == pytest.approx(12.4, rel=1e-6)
        assert (out / "characterization.png").exists()

    def test_empty_csv(self, tmp_path):
        empty = tmp_path / "e.csv"
        empty.write_text("")
        assert main(["characterize", "--bragg", str(empty), "--out", str(tmp_path / "o")]) == 3

    def test_nothing_requested(self, tmp_path):
        assert main(["characterize", "--out", str(tmp_path / "o")]) == 2


class TestTheory:
    def read(self, path):
        with open(path) as fh:
            return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(fh)]

    def test_ideal_dip(self, tmp_path):
        cfg = variant(tmp_path, "ideal", profile="photonic", transmission=0.5, mode_overlap=1,
                      pair_rate=1000, target_singles_cph=0, target_coincidence_cph=0,
                      scan_start="-2ps", scan_stop="2ps", scan_points=41)
        out = tmp_path / "th"
        assert main(["theory", "--config", str(cfg), "--out", str(out)]) == 0
        rows = self.read(out / "theory.csv")
        centre = rows[20]
        assert centre["delay_ps"] == pytest.approx(0.0, abs=1e-12)
        assert centre["rate_cph"] == pytest.approx(0.0, abs=1e-9)
        # far rows sit on the (R^2 + T^2) baseline up to the sinc^2 tail
        far = rows[0]["rate_cph"]
        assert far == pytest.approx(1000 * 0.5 * 3600, rel=1e-3)
        rates = [r["rate_cph"] for r in rows]
        assert rates == pytest.approx(rates[::-1], rel=1e-12, abs=1e-9)
        assert (out / "theory.png").exists()

    def test_shipped_config_floor(self, tmp_path):
        out = tmp_path / "th"
        assert main(["theory", "--config", "paper_plasmonic", "--out", str(out), "--no-plots"]) == 0
        rows = self.read(out / "theory.csv")
        assert rows[10]["rate_cph"] == pytest.approx(37.7 * (1 - 0.72 * 2 * 0.51 * 0.49 / 0.5002), rel=1e-6)
        assert rows[10]["accidental_cph"] == pytest.approx(16.8, abs=0.05)
