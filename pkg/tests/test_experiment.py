import os
import re

import numpy as np
import pytest

from gedi.experiment import (RESULT_FIELDS, AlgorithmSpec, ConfigError, ExperimentConfig,
                             ResultRow, SummaryRow, bias_table, emit_plots, load_human,
                             read_results_csv, run_experiment, srt_table, summarize,
                             trial_seed, with_overrides)
from gedi.plots import curve_svg
from gedi.signal_io import DEFAULT_LEVEL_DB, AudioSignal, rms, rms_to_level, save_wav
from gedi.synth import synth_babble, write_corpus

from conftest import FS

SMALL = ExperimentConfig(synthetic_words=2, snr_grid=(0.0, 3.0),
                         algorithms=(AlgorithmSpec("unprocessed"), AlgorithmSpec("ss")),
                         variants=("gedi",), seeds=(0,), noise_duration_s=5.0)


# ---- configuration --------------------------------------------------------------

def test_algorithm_spec_text_forms():
    a = AlgorithmSpec.parse("ss:alpha=2;beta=0.02")
    assert (a.kind, a.alpha, a.beta) == ("ss", 2.0, 0.02)
    assert AlgorithmSpec.parse(a.name) == a
    assert AlgorithmSpec.parse("wiener:epsilon=0.1").name == "wiener:epsilon=0.1"
    assert AlgorithmSpec.parse("unprocessed").name == "unprocessed"
    for bad in ("mmse", "ss:gamma=1", "ss:alpha=-1", "wiener:epsilon=2"):
        with pytest.raises(ValueError):
            AlgorithmSpec.parse(bad)


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig(synthetic_words=4, noise_kind="babble", snr_grid=(-6, -3, 0.5),
                           seeds=(0, 1, 2), weighting=False, variants=("mr_gedi",),
                           algorithms=(AlgorithmSpec("wiener", epsilon=0.2),))
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg
    p = tmp_path / "exp.cfg"
    p.write_text(cfg.to_text())
    assert ExperimentConfig.load(p) == cfg


def test_config_parsing_details():
    cfg = ExperimentConfig.from_text(
        "# comment\nspeech.synthetic_words = 3  # trailing\n"
        "trials.seeds = 0..4, 9\nmetric.variants = mr-gedi\n")
    assert cfg.seeds == (0, 1, 2, 3, 4, 9)
    assert cfg.variants == ("mr_gedi",)
    assert cfg.snr_grid == (-6.0, -3.0, 0.0, 3.0)
    assert ExperimentConfig(synthetic_words=1, noise_kind="babble").snr_grid[-1] == 6.0
    for text in ("speech.synthetic_words = 1\nbogus = 2", "speech.synthetic_words",
                 "speech.synthetic_words = 1\nsnr.grid = 3, 0",
                 "speech.synthetic_words = 1\nmetric.weighting = maybe",
                 "noise.kind = pink"):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_text(text)


def test_with_overrides():
    cfg = with_overrides(SMALL, workers=3, seeds=None)
    assert cfg.workers == 3 and cfg.seeds == SMALL.seeds
    assert cfg.metric.weighting_enabled


def test_trial_seed_is_stable_and_distinct():
    assert trial_seed(0, 1, -3.0, 2) == trial_seed(0, 1, -3.0, 2)
    keys = {trial_seed(b, w, s, k) for b in (0, 1) for w in range(3)
            for s in (-3.0, 0.0, 3.0) for k in range(3)}
    assert len(keys) == 54


# ---- running ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def small_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("small")
    return run_experiment(with_overrides(SMALL, output_dir=str(out))), out


def test_row_count_and_outputs(small_run):
    res, out = small_run
    assert res.ok and len(res.rows) == 2 * 2 * 2 * 1 * 1
    names = sorted(os.listdir(out))
    for f in ("config.txt", "results.csv", "summary.csv", "srt.csv", "bias.csv",
              "curves_pink_gedi.svg"):
        assert f in names
    assert ExperimentConfig.load(out / "config.txt").synthetic_words == 2
    assert all(0 <= r.score_percent <= 100 for r in res.rows)


def test_results_csv_schema(small_run, tmp_path):
    res, out = small_run
    lines = (out / "results.csv").read_text().splitlines()
    assert lines[0] == "# schema_version=1"
    assert lines[1] == ",".join(RESULT_FIELDS)
    assert read_results_csv(out / "results.csv") == res.rows
    bad = tmp_path / "bad.csv"
    bad.write_text("\n".join(lines[1:]))
    with pytest.raises(ValueError, match="schema"):
        read_results_csv(bad)
    bad.write_text("# schema_version=99\n" + "\n".join(lines[1:]))
    with pytest.raises(ValueError, match="schema"):
        read_results_csv(bad)


def test_rerun_is_bit_identical(small_run, tmp_path):
    _, out = small_run
    again = run_experiment(with_overrides(SMALL, output_dir=str(tmp_path)))
    assert (tmp_path / "results.csv").read_bytes() == (out / "results.csv").read_bytes()
    assert again.rows == small_run[0].rows


def test_parallel_matches_serial(small_run, tmp_path):
    _, out = small_run
    run_experiment(with_overrides(SMALL, output_dir=str(tmp_path), workers=2))
    assert (tmp_path / "results.csv").read_bytes() == (out / "results.csv").read_bytes()


def test_speech_dir_and_bad_files(tmp_path):
    with pytest.raises(ConfigError):
        run_experiment(ExperimentConfig(speech_dir=str(tmp_path / "missing")), write=False)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(ConfigError, match="no usable"):
        run_experiment(ExperimentConfig(speech_dir=str(empty)), write=False)
    words = tmp_path / "words"
    write_corpus(words, 1, seed=3)
    (words / "broken.wav").write_bytes(b"not a wav file")
    cfg = ExperimentConfig(speech_dir=str(words), snr_grid=(0.0,), variants=("gedi",),
                           algorithms=(AlgorithmSpec("unprocessed"),), noise_duration_s=3.0,
                           output_dir=str(tmp_path / "out"))
    res = run_experiment(cfg)
    assert len(res.rows) == 1 and not res.ok
    assert "broken.wav" in (tmp_path / "out" / "failures.log").read_text()


def test_noise_file_source(tmp_path):
    rng = np.random.default_rng(0)
    save_wav(tmp_path / "n.wav", AudioSignal(0.05 * rng.standard_normal(3 * FS), FS))
    cfg = with_overrides(SMALL, noise_kind="file", noise_file=str(tmp_path / "n.wav"),
                         snr_grid=(0.0,), algorithms=(AlgorithmSpec("unprocessed"),))
    assert len(run_experiment(cfg, write=False).rows) == 2


# ---- analysis tables -----------------------------------------------------------------

def rows_from(table):
    return [ResultRow(f"w{i}", alg, snr, 0, "gedi", pc, 1.0)
            for alg, pts in table.items() for snr, vals in pts.items()
            for i, pc in enumerate(vals)]


def test_summary_srt_and_bias(tmp_path):
    rows = rows_from({"unprocessed": {-6.0: [10, 20], -3.0: [30, 50], 0.0: [70, 80]},
                      "ss": {-6.0: [5, 5], -3.0: [20, 30], 0.0: [60, 60]}})
    summary = summarize(rows)
    first = summary[0]
    assert (first.algorithm, first.snr_db, first.n, first.mean) == ("ss", -6.0, 2, 5.0)
    assert summary[3].sd == pytest.approx(np.std([10, 20], ddof=1))
    human_csv = tmp_path / "human.csv"
    human_csv.write_text("algorithm,snr_db,percent\nunprocessed,-6,20\nunprocessed,-3,45\n"
                         "unprocessed,0,70\n")
    human = load_human(human_csv)
    srt = {r["algorithm"]: r for r in srt_table(summary, human)}
    assert srt["unprocessed"]["srt_defined"]
    assert srt["unprocessed"]["delta_srt_db"] is not None
    assert srt["ss"]["delta_srt_db"] is None
    bias = {r["algorithm"]: r for r in bias_table(summary, human)}
    assert bias["unprocessed"]["mean_difference"] == 0.0
    assert bias["ss"]["mean_difference"] == pytest.approx((5 + 25 + 60 - 15 - 40 - 75) / 3)
    assert bias["unprocessed"]["rms_error"] == pytest.approx(
        np.sqrt(((15 - 20) ** 2 + (40 - 45) ** 2 + (75 - 70) ** 2) / 3))


# ---- plots -------------------------------------------------------------------------

def test_plot_layout(tmp_path):
    summary = [SummaryRow("gedi", alg, s, 3, 20 + 10 * s + i, 4.0)
               for i, alg in enumerate(("unprocessed", "ss", "wiener:epsilon=0.1", "extra"))
               for s in (-3.0, 0.0, 3.0)]
    (path,) = emit_plots(summary, tmp_path, "pink")
    assert os.path.basename(path) == "curves_pink_gedi.svg"
    svg = open(path).read()
    assert svg.count('<g class="series"') == 4
    assert svg.count('class="srt-line"') == 1
    assert svg.count('class="errbar"') == 12


def test_single_point_series_has_no_error_bars():
    svg = curve_svg({"only": [(0.0, 50.0, 5.0)]})
    assert svg.count('<g class="series"') == 1
    assert "errbar" not in svg
    assert re.search(r"<circle", svg)


def test_empty_summary_is_an_error(tmp_path):
    with pytest.raises(ValueError):
        emit_plots([], tmp_path)
    with pytest.raises(ValueError):
        curve_svg({})


# ---- babble --------------------------------------------------------------------------

def test_synth_babble():
    b = synth_babble(2.0, seed=5)
    assert len(b) == 2 * FS and b.sample_rate == FS
    assert np.array_equal(b.samples, synth_babble(2.0, seed=5).samples)
    assert not np.array_equal(b.samples, synth_babble(2.0, seed=6).samples)
    assert rms_to_level(rms(b)) == pytest.approx(DEFAULT_LEVEL_DB, abs=1e-6)
    # babble is strongly modulated: short-term level varies far more than for pink noise
    frames = b.samples[: 2 * FS].reshape(-1, 400)
    level = 10 * np.log10(np.mean(frames ** 2, axis=1))
    assert np.std(level) > 1.0
    with pytest.raises(ValueError):
        synth_babble(0.0)
