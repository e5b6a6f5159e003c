"""Reading and writing trial streams, distributions, weights, policies and
reports."""

from __future__ import annotations

import csv
import io
import json
import math
from contextlib import contextmanager
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import IO, Any, Iterable, Sequence, Union

import numpy as np

from .analysis import SettingMarginals
from .dp import DpResult, PolicyTable
from .errors import InvalidParameterError, TrialDataError
from .polytope import StepDistribution
from .trials import SETTINGS1, SETTINGS2, RESULTS, OutcomeDistribution, TrialRecord, _normalize_primes, as_outcome, to_fraction

CSV_COLUMNS = ("trial", "setting1", "setting2", "result1", "result2")
DEVIATION_SIGMAS = 3

Source = Union[str, Path, IO[str]]


@contextmanager
def _open_text(source: Source, mode: str = "r"):
    if hasattr(source, "read") or hasattr(source, "write"):
        yield source
    else:
        with open(source, mode, newline="" if "r" in mode else None, encoding="utf-8") as fh:
            yield fh


def parse_trials(source: Source, format: str = "csv") -> list[TrialRecord]:
    """Trial records from a CSV with header ``trial,setting1,setting2,result1,result2``.

    Column order follows the header; blank lines are skipped; primes may be
    written as ``'`` or ``′``.  Errors name the input line.

    >>> parse_trials(io.StringIO("trial,setting1,setting2,result1,result2\\n3,a',b,0,+\\n"))[0].outcome.label
    "0+a'b"
    """
    if format != "csv":
        raise InvalidParameterError(f"unsupported trial format {format!r}")
    with _open_text(source) as fh:
        reader = csv.reader(fh)
        header = None
        for row in reader:
            if any(cell.strip() for cell in row):
                header = [cell.strip().lower() for cell in row]
                break
        if header is None:
            raise TrialDataError("missing CSV header", 1, "line")
        missing = [c for c in CSV_COLUMNS if c not in header]
        if missing:
            raise TrialDataError(f"missing column(s) {', '.join(missing)}", reader.line_num, "line")
        cols = [header.index(c) for c in CSV_COLUMNS]
        records = []
        last = 0
        for row in reader:
            line = reader.line_num
            if not any(cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise TrialDataError(f"expected {len(header)} fields, found {len(row)}", line, "line")
            idx, s1, s2, r1, r2 = (_normalize_primes(row[c].strip()) for c in cols)
            try:
                index = int(idx)
            except ValueError:
                raise TrialDataError(f"trial index {idx!r} is not an integer", line, "line") from None
            for token, allowed, what in ((s1, SETTINGS1, "setting1"), (s2, SETTINGS2, "setting2"),
                                         (r1, RESULTS, "result1"), (r2, RESULTS, "result2")):
                if token not in allowed:
                    raise TrialDataError(f"unknown {what} token {token!r}", line, "line")
            if index <= last:
                raise TrialDataError(f"trial index {index} does not increase", line, "line")
            last = index
            records.append(TrialRecord(index, s1, s2, r1, r2))
    return records


def write_trials(records: Iterable[TrialRecord], dest: Source) -> None:
    with _open_text(dest, "w") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in records:
            w.writerow((r.index, r.setting1, r.setting2, r.result1, r.result2))


def trials_to_csv(records: Iterable[TrialRecord]) -> str:
    buf = io.StringIO()
    write_trials(records, buf)
    return buf.getvalue()


def _load_json(source: Source) -> Any:
    # decimals are kept as text so that they convert to exact rationals
    with _open_text(source) as fh:
        try:
            return json.load(fh, parse_float=str)
        except json.JSONDecodeError as exc:
            raise TrialDataError(f"invalid JSON: {exc.msg}", exc.lineno, "line") from None


def distribution_from_json(data: Any, normalize: bool = False) -> OutcomeDistribution:
    if not isinstance(data, dict):
        raise TrialDataError("a distribution is a JSON object keyed by outcome label")
    try:
        return OutcomeDistribution.from_mapping(data, normalize=normalize)
    except InvalidParameterError as exc:
        raise TrialDataError(str(exc)) from None


def load_distribution(source: Source, normalize: bool = False) -> OutcomeDistribution:
    """Distribution from a JSON object such as ``{"++ab": "1/4", "+0ab'": 0.25}``."""
    return distribution_from_json(_load_json(source), normalize)


def load_raw_weights(source: Source) -> dict[str, Fraction]:
    """``{label: weight}`` from a distribution JSON without any validation
    beyond the labels and numbers themselves."""
    data = _load_json(source)
    if not isinstance(data, dict):
        raise TrialDataError("a distribution is a JSON object keyed by outcome label")
    try:
        return {as_outcome(k).label: to_fraction(v) for k, v in data.items()}
    except (InvalidParameterError, ValueError, ZeroDivisionError) as exc:
        raise TrialDataError(str(exc)) from None


def load_weights(source: Source) -> list[Fraction]:
    """Mixture weights from a JSON list, or an object with a ``weights`` list."""
    data = _load_json(source)
    if isinstance(data, dict):
        data = data.get("weights")
    if not isinstance(data, list):
        raise TrialDataError("weights must be a JSON list of 15 or 16 numbers")
    try:
        return [to_fraction(w) for w in data]
    except (InvalidParameterError, ValueError, ZeroDivisionError) as exc:
        raise TrialDataError(f"bad weight: {exc}") from None


def suggest_epsilon(p_a, p_b, n_trials: int | None = None, granularity="0.001") -> float:
    """Largest deviation of a setting marginal from 1/2, rounded up to a
    multiple of ``granularity``.  Marginals are read as exact decimals, so
    0.5058 gives 0.006 rather than a rounding artefact.

    >>> suggest_epsilon(0.5010, 0.5058)
    0.006
    """
    if n_trials is not None and n_trials < 1:
        raise InvalidParameterError("marginals need at least one trial")
    g = to_fraction(granularity)
    if g <= 0:
        raise InvalidParameterError("granularity must be positive")
    half = Fraction(1, 2)
    dev = max(abs(to_fraction(p_a) - half), abs(to_fraction(p_b) - half))
    return float(math.ceil(dev / g) * g)


def setting_marginals(p_a, p_b, n_trials: int) -> SettingMarginals:
    """Setting frequencies with a warning for each one further than three
    binomial standard errors from 1/2."""
    pa, pb = float(p_a), float(p_b)
    limit = DEVIATION_SIGMAS * math.sqrt(0.25 / n_trials) if n_trials else math.inf
    warnings = []
    for name, p in (("a", pa), ("b", pb)):
        if abs(p - 0.5) > limit:
            warnings.append(f"setting {name} frequency {p:.6f} deviates from 1/2 by more than "
                            f"{DEVIATION_SIGMAS} standard errors ({limit:.6f})")
    return SettingMarginals(pa, pb, n_trials, warnings)


def _json_default(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(doc: dict) -> str:
    return json.dumps(doc, indent=2, default=_json_default, allow_nan=False)


def report_schema() -> dict:
    """The JSON schema every command-line report conforms to."""
    text = resources.files("chbell").joinpath("schemas/report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def save_policy(result: DpResult, path: Union[str, Path]) -> None:
    """Store a DP result with its policy as a compressed ``.npz`` archive."""
    if result.policy is None:
        raise InvalidParameterError("DP result carries no policy")
    pol = result.policy
    lengths = np.array([r.size for r in pol.choices], dtype=np.int64)
    width = max(len(d.support) for d in result.candidates)
    values = np.zeros((len(result.candidates), width), dtype=object)
    probs = np.zeros((len(result.candidates), width), dtype=object)
    for i, d in enumerate(result.candidates):
        for j, (v, p) in enumerate(d.support):
            values[i, j] = str(v)
            probs[i, j] = str(p)
    np.savez_compressed(
        path,
        meta=np.array([result.L, result.m, pol.default, pol.scale, result.lattice_scale], dtype=np.int64),
        p_value=np.array([result.p_value, result.log_p_value]),
        starts=pol.starts,
        lengths=lengths,
        choices=np.concatenate(pol.choices) if pol.choices else np.empty(0, np.int8),
        candidate_values=values.astype(str),
        candidate_probs=probs.astype(str),
        candidate_indices=np.array(result.candidate_indices, dtype=np.int64),
    )


def load_policy(path: Union[str, Path]) -> DpResult:
    try:
        z = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise TrialDataError(f"cannot read policy file: {exc}") from None
    with z:
        L, m, default, scale, lattice_scale = (int(x) for x in z["meta"])
        offsets = np.concatenate([[0], np.cumsum(z["lengths"])])
        flat = z["choices"]
        choices = [flat[offsets[k]:offsets[k + 1]] for k in range(m)]
        cands = []
        for vrow, prow in zip(z["candidate_values"], z["candidate_probs"]):
            support = [(Fraction(v), Fraction(p)) for v, p in zip(vrow, prow) if Fraction(p) != 0]
            cands.append(StepDistribution(tuple(support)))
        p, logp = (float(x) for x in z["p_value"])
        return DpResult(
            p_value=p, log_p_value=logp, L=L, m=m, candidates=tuple(cands),
            candidate_indices=tuple(int(i) for i in z["candidate_indices"]),
            band_bounds=np.empty((0, 2), dtype=np.int64),
            policy=PolicyTable(z["starts"].copy(), choices, default, scale),
            scale=scale, lattice_scale=lattice_scale,
        )
