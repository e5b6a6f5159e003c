"""Published reference data: example trial stream and empirical tables.

The empirical tables are printed to three decimals; the first one sums to
0.999, so ``empirical_table`` renormalises exactly by default.
"""

from __future__ import annotations

from .trials import OutcomeDistribution, TrialRecord

# first eleven trials of an illustrative CH experiment
EXAMPLE_TRIALS = (
    ("00ab", 1), ("00ab'", 2), ("0+a'b", 3), ("00ab", 4), ("00a'b", 5),
    ("++a'b'", 6), ("00a'b", 7), ("0+ab'", 8), ("00ab'", 9), ("++ab", 10),
    ("00a'b'", 11),
)


def example_trials() -> list[TrialRecord]:
    return [TrialRecord.from_outcome(i, lab) for lab, i in EXAMPLE_TRIALS]


def _table(rows: dict[str, tuple[str, str, str]]) -> dict[str, str]:
    out = {}
    for settings, (pp, p0, zp) in rows.items():
        out["++" + settings] = pp
        out["+0" + settings] = p0
        out["0+" + settings] = zp
    return out


EMPIRICAL_TABLES = {
    "giustina": _table({
        "ab": (".050", ".021", ".029"),
        "ab'": (".054", ".017", ".157"),
        "a'b": (".056", ".165", ".023"),
        "a'b'": (".003", ".217", ".207"),
    }),
    "christensen": _table({
        "ab": (".044", ".026", ".026"),
        "ab'": (".049", ".020", ".162"),
        "a'b": (".051", ".172", ".019"),
        "a'b'": (".003", ".219", ".209"),
    }),
    # non-signaling, non-local example where J_E2 beats J
    "hypothetical": _table({
        "ab": (".110", ".002", "0"),
        "ab'": (".012", ".100", "0"),
        "a'b": (".110", ".272", "0"),
        "a'b'": ("0", ".382", ".012"),
    }),
}


def empirical_table(name: str, normalize: bool = True) -> OutcomeDistribution:
    """Exact non-00 distribution for one of ``EMPIRICAL_TABLES``."""
    return OutcomeDistribution.from_mapping(
        EMPIRICAL_TABLES[name], support_mode="non00_12", normalize=normalize
    )
