"""
Corpus evaluation and report writers.

Corpus JSON-lines schema, one explanation per line:
    {"user_id": "u1", "item_id": "the_rosie_project",
     "explanation": "...", "features": ["humor"]}   # features optional
"""
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd
from openpyxl import Workbook
from openpyxl.styles import Font
from openpyxl.utils import get_column_letter

from kgexplain.embedding.store import EmbeddingStore
from kgexplain.errors import DataError, UnscoreableCorpusError
from kgexplain.evaluation.features import FeatureSet, extract_features
from kgexplain.evaluation.metrics import EvalInstance, Factuality, FeatureVerdict, feature_verdicts, rates_from_verdicts
from kgexplain.evaluation.preference import Alignment, PreferenceProfile
from kgexplain.kg.catalog import ItemCatalog, item_features
from kgexplain.utils.io import iter_jsonl, write_json, write_text

logger = logging.getLogger(__name__)


@dataclass
class InstanceResult:
    user_id: str
    item_id: str
    verdicts: List[FeatureVerdict]
    f_ehr: Optional[float]
    p_ehr: Optional[float]
    provenance: str

    @property
    def scoreable(self) -> bool:
        return self.f_ehr is not None

    def p_ehr_at(self, tau: float, hist: FrozenSet[str]) -> Optional[float]:
        if not self.verdicts:
            return None
        bad = [v.feature not in hist and v.proxy_score < tau for v in self.verdicts]
        return sum(bad) / len(bad)


@dataclass
class EvalReport:
    f_ehr: float
    p_ehr: float
    instances: List[InstanceResult]
    scoreable: int
    unscoreable: int
    tau: Optional[float]
    factuality_histogram: Dict[str, int] = field(default_factory=dict)
    alignment_histogram: Dict[str, int] = field(default_factory=dict)
    tau_sweep: Optional[pd.DataFrame] = None

    def to_dict(self) -> Dict[str, Any]:
        body: Dict[str, Any] = {
            "f_ehr": self.f_ehr,
            "p_ehr": self.p_ehr,
            "tau": self.tau,
            "scoreable": self.scoreable,
            "unscoreable": self.unscoreable,
            "factuality_histogram": self.factuality_histogram,
            "alignment_histogram": self.alignment_histogram,
            "instances": [
                {
                    "user_id": r.user_id,
                    "item_id": r.item_id,
                    "f_ehr": r.f_ehr,
                    "p_ehr": r.p_ehr,
                    "provenance": r.provenance,
                    "verdicts": [v.to_dict() for v in r.verdicts],
                }
                for r in self.instances
            ],
        }
        if self.tau_sweep is not None:
            body["tau_sweep"] = self.tau_sweep.to_dict(orient="records")
        return body


def load_corpus(
    lines: Iterable[str],
    catalog: ItemCatalog,
    vocabulary: Optional[Iterable[str]] = None,
    source: str = "corpus",
) -> List[EvalInstance]:
    """
    Parse an evaluation corpus. Pre-extracted `features` take precedence
    over lexicon extraction.

    Raises:
        DataError: On malformed records
        UnknownItemError: If an item is not catalogued
    """
    vocab = list(vocabulary) if vocabulary is not None else sorted(catalog.vocabulary())
    instances = []
    for line_number, record in iter_jsonl(lines, source):
        user_id = str(record.get("user_id", "")).strip()
        item_id = str(record.get("item_id", "")).strip()
        if not user_id or not item_id:
            raise DataError(f"{source}:{line_number}: user_id and item_id are required")
        text = str(record.get("explanation", ""))
        if record.get("features") is not None:
            if not isinstance(record["features"], list):
                raise DataError(f"{source}:{line_number}: features must be a list")
            features = FeatureSet.provided(record["features"])
        else:
            features = extract_features(text, vocab)
        instances.append(EvalInstance(
            user_id=user_id,
            item_id=item_id,
            explanation=text,
            features=features,
            item_features=item_features(catalog, item_id),
        ))
    logger.info(f"Loaded {len(instances)} evaluation instance(s) from {source}")
    return instances


def _evaluate_one(instance: EvalInstance, profiles: Mapping[str, PreferenceProfile], store: EmbeddingStore) -> InstanceResult:
    if instance.user_id not in profiles:
        raise DataError(f"No preference profile for user {instance.user_id!r}")
    verdicts = feature_verdicts(instance, profiles[instance.user_id], store)
    instance.verdicts = verdicts
    rates = rates_from_verdicts(verdicts)
    return InstanceResult(
        user_id=instance.user_id,
        item_id=instance.item_id,
        verdicts=verdicts,
        f_ehr=rates["f_ehr"] if rates else None,
        p_ehr=rates["p_ehr"] if rates else None,
        provenance=instance.features.provenance.value,
    )


def tau_grid(spec: str) -> List[float]:
    """
    Parse 'start:stop:step' into an inclusive grid rounded to 10 decimals.

    Raises:
        ValueError: On a malformed spec or a grid leaving [0, 1]
    """
    try:
        start, stop, step = (float(x) for x in spec.split(":"))
    except ValueError as e:
        raise ValueError(f"tau sweep must look like 'start:stop:step', got {spec!r}") from e
    if step <= 0 or stop < start:
        raise ValueError(f"tau sweep needs step > 0 and stop >= start, got {spec!r}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    grid = [round(start + i * step, 10) for i in range(count)]
    if grid[0] < 0 or grid[-1] > 1:
        raise ValueError(f"tau sweep must stay within [0, 1], got {spec!r}")
    return grid


def evaluate_corpus(
    instances: Sequence[EvalInstance],
    profiles: Mapping[str, PreferenceProfile],
    store: EmbeddingStore,
    tau_values: Optional[Sequence[float]] = None,
    jobs: int = 1,
) -> EvalReport:
    """
    Score every instance and average over the scoreable ones.

    Args:
        instances: Corpus instances
        profiles: user id -> profile (its tau is the reporting threshold)
        store: Store whose text encoder embeds features
        tau_values: Optional grid for a P-EHR sweep
        jobs: Worker threads

    Returns:
        EvalReport

    Raises:
        UnscoreableCorpusError: If no instance mentions any feature
    """
    if jobs > 1 and len(instances) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda i: _evaluate_one(i, profiles, store), instances))
    else:
        results = [_evaluate_one(i, profiles, store) for i in instances]

    scored = [r for r in results if r.scoreable]
    unscoreable = len(results) - len(scored)
    if not scored:
        raise UnscoreableCorpusError(unscoreable)
    if unscoreable:
        logger.warning(f"{unscoreable} instance(s) mention no feature and are excluded from corpus rates")

    factuality = Counter(v.factuality.value for r in scored for v in r.verdicts)
    alignment = Counter(v.alignment.value for r in scored for v in r.verdicts)
    taus = {p.tau for p in profiles.values()}
    tau = taus.pop() if len(taus) == 1 else None

    sweep = None
    if tau_values:
        rows = []
        for t in tau_values:
            values = [r.p_ehr_at(t, profiles[r.user_id].features) for r in scored]
            rows.append({
                "tau": t,
                "p_ehr": float(np.mean(values)),
                "f_ehr": float(np.mean([r.f_ehr for r in scored])),
            })
        sweep = pd.DataFrame(rows, columns=["tau", "p_ehr", "f_ehr"])

    report = EvalReport(
        f_ehr=float(np.mean([r.f_ehr for r in scored])),
        p_ehr=float(np.mean([r.p_ehr for r in scored])),
        instances=results,
        scoreable=len(scored),
        unscoreable=unscoreable,
        tau=tau,
        factuality_histogram={f.value: factuality.get(f.value, 0) for f in Factuality},
        alignment_histogram={a.value: alignment.get(a.value, 0) for a in Alignment},
        tau_sweep=sweep,
    )
    logger.info(f"Corpus F-EHR={report.f_ehr:.4f} P-EHR={report.p_ehr:.4f} over {report.scoreable} instance(s)")
    return report


# ---------------------------------------------------------------------------
# Writers
# ---------------------------------------------------------------------------

def report_frame(report: EvalReport) -> pd.DataFrame:
    rows = [
        {
            "user_id": r.user_id,
            "item_id": r.item_id,
            "features": len(r.verdicts),
            "f_ehr": r.f_ehr,
            "p_ehr": r.p_ehr,
            "provenance": r.provenance,
        }
        for r in report.instances
    ]
    return pd.DataFrame(rows, columns=["user_id", "item_id", "features", "f_ehr", "p_ehr", "provenance"])


def format_report_table(report: EvalReport) -> str:
    frame = report_frame(report)
    summary = (
        f"corpus F-EHR {report.f_ehr:.4f}  P-EHR {report.p_ehr:.4f}  "
        f"(scoreable {report.scoreable}, unscoreable {report.unscoreable}, tau {report.tau})"
    )
    return frame.to_string(index=False, na_rep="-", float_format=lambda x: f"{x:.4f}") + "\n" + summary


def write_report_json(report: EvalReport, path: Union[str, Path]) -> Path:
    return write_json(path, report.to_dict())


def write_tau_sweep_csv(report: EvalReport, path: Union[str, Path]) -> Optional[Path]:
    if report.tau_sweep is None:
        return None
    return write_text(path, report.tau_sweep.to_csv(index=False, lineterminator="\n"))


def _write_sheet(sheet, frame: pd.DataFrame) -> None:
    sheet.append(list(frame.columns))
    for cell in sheet[1]:
        cell.font = Font(bold=True)
    for row in frame.itertuples(index=False):
        sheet.append([None if (isinstance(v, float) and np.isnan(v)) else v for v in row])
    for idx, column in enumerate(frame.columns, start=1):
        width = max([len(str(column))] + [len(str(v)) for v in frame[column]]) + 2
        sheet.column_dimensions[get_column_letter(idx)].width = min(width, 60)


def write_report_xlsx(report: EvalReport, path: Union[str, Path]) -> Path:
    """Workbook with a per-instance sheet and, when present, the tau sweep."""
    wb = Workbook()
    sheet = wb.active
    sheet.title = "Instances"
    _write_sheet(sheet, report_frame(report))
    if report.tau_sweep is not None:
        _write_sheet(wb.create_sheet("Tau sweep"), report.tau_sweep)
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    wb.save(out)
    logger.info(f"Saved Excel report to {out}")
    return out
