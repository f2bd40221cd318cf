"""Batch experiments: mix words with noise over an SNR grid, enhance, score
and tabulate.

A trial is one (word, SNR, seed) triple. Each trial mixes once, runs
every configured algorithm on the same noisy signal and scores the output
with every configured variant, so rows sharing a trial see identical noise.
Trials are independent and can run in worker processes; rows are merged by
the sort key (word, algorithm, snr, seed, variant), which keeps the output
byte-identical whatever the worker count.
"""
from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .enhancement import SpecSubConfig, WienerConfig, oracle_wiener, spectral_subtract
from .evaluation import (IntelligibilityCurve, fit_psychometric, mean_difference,
                         rms_error, delta_srt)
from .metric import VARIANTS, GediConfig, score_variants
from .plots import write_curve_svg
from .signal_io import (AudioFormatError, AudioSignal, DEFAULT_LEVEL_DB, DEFAULT_SAMPLE_RATE,
                        MixSpec, generate_pink_noise, level_to_rms, load_wav, mix_at_snr,
                        normalize_level, save_wav)
from .synth import synth_babble, synth_corpus

log = logging.getLogger("gedi")

SCHEMA_VERSION = 1
RESULT_FIELDS = ("word_id", "algorithm", "snr_db", "seed", "variant", "score_percent",
                 "sdr_env")
DEFAULT_SNR_GRID = {"pink": (-6.0, -3.0, 0.0, 3.0), "babble": (-6.0, -3.0, 0.0, 3.0, 6.0)}


class ConfigError(ValueError):
    pass


# --------------------------------------------------------------------------
# algorithms

@dataclass(frozen=True)
class AlgorithmSpec:
    """An enhancement condition: "unprocessed", "ss" or "wiener".

    Text form is `kind[:key=value;key=value]`, e.g. ``ss:alpha=1;beta=0.01``.
    """

    kind: str
    alpha: float = 1.0
    beta: float = 0.01
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "epsilon"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.kind not in ("unprocessed", "ss", "wiener"):
            raise ConfigError(f"unknown algorithm {self.kind!r}")
        if self.kind == "ss":
            SpecSubConfig(self.alpha, self.beta)
        if self.kind == "wiener":
            WienerConfig(self.epsilon)

    @property
    def name(self) -> str:
        if self.kind == "ss":
            return f"ss:alpha={self.alpha!r};beta={self.beta!r}"
        if self.kind == "wiener":
            return f"wiener:epsilon={self.epsilon!r}"
        return "unprocessed"

    @classmethod
    def parse(cls, text: str) -> "AlgorithmSpec":
        kind, _, rest = text.strip().partition(":")
        kw = {}
        for part in filter(None, rest.split(";")):
            key, eq, val = part.partition("=")
            if not eq or key.strip() not in ("alpha", "beta", "epsilon"):
                raise ConfigError(f"bad algorithm parameter {part!r} in {text!r}")
            kw[key.strip()] = float(val)
        return cls(kind.strip(), **kw)

    def apply(self, noisy: AudioSignal, clean: AudioSignal, noise: AudioSignal) -> AudioSignal:
        if self.kind == "ss":
            return spectral_subtract(noisy, noise, SpecSubConfig(self.alpha, self.beta))
        if self.kind == "wiener":
            return oracle_wiener(noisy, clean, noise, WienerConfig(self.epsilon))
        return noisy


# --------------------------------------------------------------------------
# configuration

def _parse_list(text: str, conv=str) -> tuple:
    items = []
    for tok in filter(None, (t.strip() for t in text.split(","))):
        if conv is int and ".." in tok:
            a, b = tok.split("..")
            items.extend(range(int(a), int(b) + 1))
        else:
            items.append(conv(tok))
    return tuple(items)


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce an experiment.

    Either `speech_dir` (a directory of 16 kHz mono WAVs) or
    `synthetic_words` > 0 supplies the words. Babble without `noise_file`
    is synthesized from overlapping synthetic talkers.
    """

    speech_dir: str = ""
    synthetic_words: int = 0
    noise_kind: str = "pink"
    noise_file: str = ""
    noise_seed: int = 1
    noise_duration_s: float = 30.0
    snr_grid: Tuple[float, ...] = ()
    algorithms: Tuple[AlgorithmSpec, ...] = (AlgorithmSpec("unprocessed"),
                                             AlgorithmSpec("ss"),
                                             AlgorithmSpec("wiener", epsilon=0.1))
    variants: Tuple[str, ...] = VARIANTS
    weighting: bool = True
    seeds: Tuple[int, ...] = (0,)
    base_seed: int = 0
    output_dir: str = "results"
    workers: int = 1
    human_file: str = ""
    save_audio: bool = False

    def __post_init__(self):
        if self.noise_kind not in ("pink", "babble", "file"):
            raise ConfigError(f"noise.kind must be pink, babble or file, not {self.noise_kind!r}")
        if self.noise_kind == "file" and not self.noise_file:
            raise ConfigError("noise.kind = file needs noise.file")
        if not self.snr_grid:
            object.__setattr__(self, "snr_grid", DEFAULT_SNR_GRID.get(self.noise_kind,
                                                                       DEFAULT_SNR_GRID["pink"]))
        grid = tuple(float(s) for s in self.snr_grid)
        if list(grid) != sorted(set(grid)):
            raise ConfigError("snr.grid must be strictly increasing")
        object.__setattr__(self, "snr_grid", grid)
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        if len({a.name for a in self.algorithms}) != len(self.algorithms):
            raise ConfigError("duplicate algorithms")
        if not self.variants or any(v not in VARIANTS for v in self.variants):
            raise ConfigError(f"metric.variants must be drawn from {VARIANTS}")
        if not self.seeds:
            raise ConfigError("trials.seeds is empty")
        if not self.speech_dir and self.synthetic_words <= 0:
            raise ConfigError("set speech.dir or speech.synthetic_words")
        if self.workers < 1:
            raise ConfigError("run.workers must be at least 1")

    # key -> (attribute, parser, formatter)
    _KEYS = {
        "speech.dir": ("speech_dir", str, str),
        "speech.synthetic_words": ("synthetic_words", int, str),
        "noise.kind": ("noise_kind", str, str),
        "noise.file": ("noise_file", str, str),
        "noise.seed": ("noise_seed", int, str),
        "noise.duration_s": ("noise_duration_s", float, repr),
        "snr.grid": ("snr_grid", lambda t: _parse_list(t, float),
                     lambda v: ", ".join(repr(s) for s in v)),
        "algorithms": ("algorithms", lambda t: tuple(AlgorithmSpec.parse(a) for a in
                                                     _parse_list(t)),
                       lambda v: ", ".join(a.name for a in v)),
        "metric.variants": ("variants", lambda t: tuple(x.replace("-", "_") for x in
                                                        _parse_list(t)),
                            lambda v: ", ".join(v)),
        "metric.weighting": ("weighting", _parse_bool, lambda v: "true" if v else "false"),
        "trials.seeds": ("seeds", lambda t: _parse_list(t, int),
                         lambda v: ", ".join(str(s) for s in v)),
        "trials.base_seed": ("base_seed", int, str),
        "run.output_dir": ("output_dir", str, str),
        "run.workers": ("workers", int, str),
        "human.file": ("human_file", str, str),
        "run.save_audio": ("save_audio", _parse_bool, lambda v: "true" if v else "false"),
    }

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        kw = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, eq, val = line.partition("=")
            key = key.strip()
            if not eq:
                raise ConfigError(f"line {lineno}: expected key = value")
            if key not in cls._KEYS:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
            attr, parse, _ = cls._KEYS[key]
            try:
                kw[attr] = parse(val.strip())
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"line {lineno}: {exc}") from None
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def to_text(self) -> str:
        lines = [f"# gedi experiment config (schema_version={SCHEMA_VERSION})"]
        for key, (attr, _, fmt) in self._KEYS.items():
            lines.append(f"{key} = {fmt(getattr(self, attr))}")
        return "\n".join(lines) + "\n"

    @property
    def metric(self) -> GediConfig:
        noise = "babble" if self.noise_kind == "babble" else "pink"
        return GediConfig(weighting_enabled=self.weighting, noise=noise)


# --------------------------------------------------------------------------
# inputs

@dataclass(frozen=True)
class ResultRow:
    word_id: str
    algorithm: str
    snr_db: float
    seed: int
    variant: str
    score_percent: float
    sdr_env: float

    @property
    def sort_key(self):
        return (self.word_id, self.algorithm, self.snr_db, self.seed, self.variant)


@dataclass
class ExperimentResult:
    rows: List[ResultRow]
    failures: List[str] = field(default_factory=list)
    summary: List["SummaryRow"] = field(default_factory=list)
    srt_rows: List[dict] = field(default_factory=list)
    bias_rows: List[dict] = field(default_factory=list)
    files: Dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures


def load_words(cfg: ExperimentConfig, failures: Optional[list] = None):
    """Return [(word_id, AudioSignal)], skipping unreadable files."""
    if cfg.speech_dir:
        if not os.path.isdir(cfg.speech_dir):
            raise ConfigError(f"speech.dir {cfg.speech_dir!r} is not a directory")
        names = sorted(f for f in os.listdir(cfg.speech_dir) if f.lower().endswith(".wav"))
        words = []
        for name in names:
            try:
                words.append((os.path.splitext(name)[0],
                              load_wav(os.path.join(cfg.speech_dir, name))))
            except (AudioFormatError, OSError, EOFError) as exc:
                log.error("skipping %s: %s", name, exc)
                if failures is not None:
                    failures.append(f"{name}: {exc}")
        if not words:
            raise ConfigError(f"no usable WAV files in {cfg.speech_dir!r}")
        return words
    corpus = synth_corpus(cfg.synthetic_words, seed=cfg.base_seed)
    return [(f"word_{i:03d}", w) for i, w in enumerate(corpus)]


def load_noise(cfg: ExperimentConfig) -> AudioSignal:
    if cfg.noise_kind == "file" or cfg.noise_file:
        noise = load_wav(cfg.noise_file)
        return normalize_level(noise, level_to_rms(DEFAULT_LEVEL_DB))
    if cfg.noise_kind == "babble":
        return synth_babble(cfg.noise_duration_s, seed=cfg.noise_seed)
    return generate_pink_noise(cfg.noise_duration_s, DEFAULT_SAMPLE_RATE, cfg.noise_seed)


def trial_seed(base_seed: int, word_index: int, snr_db: float, seed: int) -> int:
    """Noise-excerpt seed for one trial, derived with SeedSequence."""
    snr_key = int(round(snr_db * 1000)) + (1 << 20)
    ss = np.random.SeedSequence([base_seed, word_index, snr_key, seed])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


# --------------------------------------------------------------------------
# trial execution

_STATE: dict = {}


def audio_path(cfg: ExperimentConfig, word_id: str, alg: AlgorithmSpec, snr: float,
               seed: int) -> str:
    tag = alg.name.replace(":", "_").replace(";", "_").replace("=", "")
    return os.path.join(cfg.output_dir, "audio", f"{word_id}__{tag}__snr{snr:+g}__s{seed}.wav")


def _init_worker(cfg, words, noise):
    _STATE.update(cfg=cfg, words=words, noise=noise)


def _run_trial(task):
    word_index, snr, seed = task
    cfg: ExperimentConfig = _STATE["cfg"]
    word_id, clean = _STATE["words"][word_index]
    try:
        spec = MixSpec(snr, trial_seed(cfg.base_seed, word_index, snr, seed), cfg.noise_kind)
        noisy, noise_used = mix_at_snr(clean, _STATE["noise"], spec)
        rows = []
        metric = cfg.metric
        for alg in cfg.algorithms:
            enhanced = alg.apply(noisy, clean, noise_used)
            if cfg.save_audio:
                save_wav(audio_path(cfg, word_id, alg, snr, seed), enhanced)
            results = score_variants(clean, enhanced, metric, cfg.variants)
            for variant in cfg.variants:
                r = results[variant]
                rows.append(ResultRow(word_id, alg.name, float(snr), int(seed), variant,
                                      float(r.score), float(r.sdr_env)))
        return rows, None
    except Exception as exc:  # noqa: BLE001 - one bad trial must not stop the batch
        return [], f"{word_id} snr={snr:g} seed={seed}: {type(exc).__name__}: {exc}"


def run_trials(cfg: ExperimentConfig, words, noise) -> Tuple[List[ResultRow], List[str]]:
    tasks = [(wi, snr, seed) for wi in range(len(words)) for snr in cfg.snr_grid
             for seed in cfg.seeds]
    rows: List[ResultRow] = []
    failures: List[str] = []
    if cfg.workers == 1:
        _init_worker(cfg, words, noise)
        outcomes = [_run_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(cfg.workers, initializer=_init_worker,
                                 initargs=(cfg, words, noise)) as pool:
            outcomes = list(pool.map(_run_trial, tasks, chunksize=4))
    for trial_rows, err in outcomes:
        rows.extend(trial_rows)
        if err:
            log.error("trial failed: %s", err)
            failures.append(err)
    rows.sort(key=lambda r: r.sort_key)
    return rows, failures


# --------------------------------------------------------------------------
# tables

@dataclass(frozen=True)
class SummaryRow:
    variant: str
    algorithm: str
    snr_db: float
    n: int
    mean: float
    sd: float


def summarize(rows: Sequence[ResultRow]) -> List[SummaryRow]:
    """Mean and SD (across words and seeds) per variant, algorithm and SNR."""
    groups: Dict[tuple, list] = {}
    for r in rows:
        groups.setdefault((r.variant, r.algorithm, r.snr_db), []).append(r.score_percent)
    out = []
    for (v, a, s), vals in sorted(groups.items()):
        x = np.asarray(vals)
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        out.append(SummaryRow(v, a, s, int(x.size), float(np.mean(x)), sd))
    return out


def curves(summary: Sequence[SummaryRow]) -> Dict[Tuple[str, str], IntelligibilityCurve]:
    pts: Dict[tuple, list] = {}
    for s in summary:
        pts.setdefault((s.variant, s.algorithm), []).append((s.snr_db, s.mean))
    return {k: IntelligibilityCurve(tuple(v), f"{k[1]} [{k[0]}]") for k, v in pts.items()}


def load_human(path) -> Dict[str, IntelligibilityCurve]:
    """Human reference curves from a CSV with columns algorithm, snr_db, percent."""
    pts: Dict[str, list] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(row for row in fh if not row.startswith("#")):
            pts.setdefault(rec["algorithm"], []).append((float(rec["snr_db"]),
                                                         float(rec["percent"])))
    return {a: IntelligibilityCurve(tuple(p), f"{a} [human]") for a, p in pts.items()}


def srt_table(summary, human: Optional[Dict[str, IntelligibilityCurve]] = None) -> List[dict]:
    """SRT per (variant, algorithm); ΔSRT against human curves when given."""
    human_srt = {}
    for alg, c in (human or {}).items():
        fit = fit_psychometric(c)
        human_srt[alg] = fit.mu if fit.srt_defined else None
    out = []
    for (variant, alg), c in sorted(curves(summary).items()):
        row = dict(variant=variant, algorithm=alg, srt_db=None, sd_db=None, fit_rms=None,
                   srt_defined=False, delta_srt_db=None)
        if len(c.points) >= 3:
            fit = fit_psychometric(c)
            row.update(sd_db=fit.sd, fit_rms=fit.residual, srt_defined=fit.srt_defined)
            if fit.srt_defined:
                row["srt_db"] = fit.mu
                if human_srt.get(alg) is not None:
                    row["delta_srt_db"] = delta_srt(fit.mu, human_srt[alg])
        out.append(row)
    return out


def bias_table(summary, human: Optional[Dict[str, IntelligibilityCurve]] = None,
               reference: str = "unprocessed") -> List[dict]:
    """Mean difference to the `reference` algorithm and RMS error to human data."""
    cs = curves(summary)
    out = []
    for (variant, alg), c in sorted(cs.items()):
        ref = cs.get((variant, reference))
        row = dict(variant=variant, algorithm=alg, mean_difference=None, rms_error=None)
        if ref is not None and np.array_equal(ref.snr_db, c.snr_db):
            row["mean_difference"] = mean_difference(c, ref)
        if human and alg in human and np.array_equal(human[alg].snr_db, c.snr_db):
            row["rms_error"] = rms_error(c, human[alg])
        out.append(row)
    return out


# --------------------------------------------------------------------------
# output

def _num(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header: Sequence[str], records: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for rec in records:
        w.writerow([_num(v) for v in rec])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return str(path)


def write_results_csv(path, rows: Sequence[ResultRow]) -> str:
    return _write_csv(path, RESULT_FIELDS,
                      [[getattr(r, f) for f in RESULT_FIELDS] for r in rows])


def read_results_csv(path) -> List[ResultRow]:
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# schema_version="):
            raise ValueError(f"{path}: missing schema_version header")
        version = int(first.split("=", 1)[1])
        if version != SCHEMA_VERSION:
            raise ValueError(f"{path}: unsupported schema_version {version}")
        out = []
        for rec in csv.DictReader(fh):
            out.append(ResultRow(rec["word_id"], rec["algorithm"], float(rec["snr_db"]),
                                 int(rec["seed"]), rec["variant"],
                                 float(rec["score_percent"]), float(rec["sdr_env"])))
    return out


def write_tables(out_dir, summary, srt_rows, bias_rows) -> Dict[str, str]:
    os.makedirs(out_dir, exist_ok=True)
    files = {}
    files["summary"] = _write_csv(
        os.path.join(out_dir, "summary.csv"),
        ("variant", "algorithm", "snr_db", "n", "mean_percent", "sd_percent"),
        [(s.variant, s.algorithm, s.snr_db, s.n, s.mean, s.sd) for s in summary])
    keys = ("variant", "algorithm", "srt_db", "sd_db", "fit_rms", "srt_defined", "delta_srt_db")
    files["srt"] = _write_csv(os.path.join(out_dir, "srt.csv"), keys,
                              [[r[k] for k in keys] for r in srt_rows])
    keys = ("variant", "algorithm", "mean_difference", "rms_error")
    files["bias"] = _write_csv(os.path.join(out_dir, "bias.csv"), keys,
                               [[r[k] for k in keys] for r in bias_rows])
    return files


def emit_plots(summary: Sequence[SummaryRow], out_dir, noise_label: str = "pink") -> List[str]:
    """One SVG per (noise, variant): score against SNR, one series per algorithm."""
    if not summary:
        raise ValueError("empty summary")
    paths = []
    for variant in sorted({s.variant for s in summary}):
        series: Dict[str, list] = {}
        for s in summary:
            if s.variant == variant:
                series.setdefault(s.algorithm, []).append((s.snr_db, s.mean, s.sd))
        path = os.path.join(out_dir, f"curves_{noise_label}_{variant}.svg")
        paths.append(write_curve_svg(path, series, f"{variant} predictions, {noise_label} noise"))
    return paths


def analyze_rows(rows, human=None):
    summary = summarize(rows)
    return summary, srt_table(summary, human), bias_table(summary, human)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every trial of `cfg`; with `write`, emit CSVs, plots and a config echo."""
    failures: List[str] = []
    words = load_words(cfg, failures)
    noise = load_noise(cfg)
    human = load_human(cfg.human_file) if cfg.human_file else None
    log.info("%d words x %d SNRs x %d seeds x %d algorithms", len(words), len(cfg.snr_grid),
             len(cfg.seeds), len(cfg.algorithms))
    if cfg.save_audio:
        os.makedirs(os.path.join(cfg.output_dir, "audio"), exist_ok=True)
    rows, trial_failures = run_trials(cfg, words, noise)
    failures.extend(trial_failures)
    result = ExperimentResult(rows, failures)
    if rows:
        result.summary, result.srt_rows, result.bias_rows = analyze_rows(rows, human)
    if write:
        out = cfg.output_dir
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, "config.txt"), "w", encoding="utf-8") as fh:
            fh.write(cfg.to_text())
        result.files["config"] = os.path.join(out, "config.txt")
        result.files["results"] = write_results_csv(os.path.join(out, "results.csv"), rows)
        if rows:
            result.files.update(write_tables(out, result.summary, result.srt_rows,
                                             result.bias_rows))
            for p in emit_plots(result.summary, out, cfg.noise_kind):
                result.files[os.path.basename(p)] = p
        if failures:
            with open(os.path.join(out, "failures.log"), "w", encoding="utf-8") as fh:
                fh.write("\n".join(failures) + "\n")
    return result


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    """Copy of `cfg` with the non-None entries of `changes` applied."""
    names = {f.name for f in fields(cfg)}
    return replace(cfg, **{k: v for k, v in changes.items() if v is not None and k in names})
