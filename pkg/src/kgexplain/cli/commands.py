"""
Subcommand implementations. Each takes the parsed arguments and a
validated EngineConfig and returns a process exit code.
"""
import logging
import subprocess
import sys
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd

from kgexplain.config.constants import ArtifactNames
from kgexplain.config.settings import EngineConfig
from kgexplain.errors import ConfigError, DataError, KGExplainError
from kgexplain.evaluation.features import extract_features
from kgexplain.evaluation.metrics import EvalInstance
from kgexplain.evaluation.preference import PreferenceProfile, build_profile
from kgexplain.evaluation.report import (
    EvalReport,
    evaluate_corpus,
    format_report_table,
    load_corpus,
    tau_grid,
    write_report_json,
    write_report_xlsx,
    write_tau_sweep_csv,
)
from kgexplain.explain.generation import StubGenerator, make_generator
from kgexplain.explain.pipeline import Explainer
from kgexplain.kg.catalog import item_features
from kgexplain.retrieval.export import result_to_record
from kgexplain.retrieval.pipeline import EvidenceRetriever
from kgexplain.utils.date_utils import run_stamp
from kgexplain.utils.io import dumps_canonical, read_lines, write_json, write_jsonl, write_text
from kgexplain.workspace import Workspace, WorkspaceOperations

logger = logging.getLogger(__name__)

SWEEP_PARAMS = {
    "gamma": ("retrieval", "gamma", float),
    "top_n": ("retrieval", "top_n", int),
    "max_hops": ("retrieval", "max_hops", int),
    "tau": ("evaluation", "tau", float),
}


def run_dir(config: EngineConfig, out: Optional[str]) -> Path:
    path = Path(out) if out else Path(config.data.runs_dir) / f"{run_stamp()}-{config.config_hash()}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def _users(ws: Workspace, user: Optional[str]) -> List[str]:
    if user:
        return [user]
    users = [u for u, h in sorted(ws.histories.items()) if h.target_item]
    if not users:
        raise DataError("No user has a target_item; pass --user and --target")
    return users


def profiles_for(ws: Workspace, tau: float) -> Dict[str, PreferenceProfile]:
    return {u: build_profile(h, ws.store, tau) for u, h in sorted(ws.histories.items())}


def explain_instances(ws: Workspace, config: EngineConfig) -> List[EvalInstance]:
    """Explain every held-out target with the stub backend and wrap the results for evaluation."""
    explainer = Explainer(EvidenceRetriever(ws, config), StubGenerator())
    vocab = sorted(ws.catalog.vocabulary())
    instances = []
    for user_id in _users(ws, None):
        explanation = explainer.explain(user_id)
        target = explanation.retrieval.target
        instances.append(EvalInstance(
            user_id=user_id,
            item_id=target,
            explanation=explanation.text,
            features=extract_features(explanation.text, vocab),
            item_features=item_features(ws.catalog, target),
        ))
    return instances


def evaluate_variant(ws: Workspace, config: EngineConfig) -> EvalReport:
    instances = explain_instances(ws, config)
    return evaluate_corpus(instances, profiles_for(ws, config.evaluation.tau), ws.store, jobs=config.workers)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_index(args, config: EngineConfig) -> int:
    summary = WorkspaceOperations.build_index(config, index_dir=getattr(args, "index_dir", None))
    print(
        f"index: {summary.index_dir}\n"
        f"entities: {summary.entities}\nrelations: {summary.relations}\ntriples: {summary.triples}\n"
        f"wall time: {summary.seconds:.2f}s"
    )
    return 0


def cmd_retrieve(args, config: EngineConfig) -> int:
    ws = WorkspaceOperations.open(config)
    retriever = EvidenceRetriever(ws, config)
    records = []
    for user_id in _users(ws, args.user):
        result = retriever.retrieve(user_id, args.target)
        records.append(result_to_record(result, ws.graph))

    out = run_dir(config, args.out)
    write_jsonl(out / ArtifactNames.RETRIEVAL, records)
    for record in records:
        print(dumps_canonical(record))
    logger.info(f"Wrote {out / ArtifactNames.RETRIEVAL}")
    return 0


def cmd_explain(args, config: EngineConfig) -> int:
    ws = WorkspaceOperations.open(config)
    retriever = EvidenceRetriever(ws, config)
    out = run_dir(config, args.out)

    if args.dump_prompt:
        explainer = Explainer(retriever, StubGenerator())
        for user_id in _users(ws, args.user):
            bundle = explainer.build_prompt(retriever.retrieve(user_id, args.target))
            suffix = "" if args.user else f".{user_id}"
            bundle.export(out / f"{ArtifactNames.PROMPT}{suffix}")
            print(bundle.text)
        return 0

    explainer = Explainer(retriever, make_generator(config, args.backend))
    provenance = []
    texts = []
    for user_id in _users(ws, args.user):
        explanation = explainer.explain(user_id, args.target)
        provenance.append(explainer.provenance(explanation))
        texts.append(explanation.text)
        if args.user:
            explanation.prompt.export(out / ArtifactNames.PROMPT)
        print(explanation.text)

    write_text(out / ArtifactNames.EXPLANATION, "".join(f"{t}\n" for t in texts))
    write_json(out / ArtifactNames.PROVENANCE, provenance if len(provenance) > 1 else provenance[0])
    return 0


def cmd_eval(args, config: EngineConfig) -> int:
    corpus_path = args.corpus or config.data.corpus
    if not corpus_path:
        raise ConfigError("No corpus given: pass --corpus or set data.corpus")
    try:
        grid = tau_grid(args.tau_sweep) if args.tau_sweep else None
    except ValueError as e:
        raise KGExplainError(str(e)) from e

    ws = WorkspaceOperations.open(config)
    instances = load_corpus(read_lines(corpus_path), ws.catalog, source=corpus_path)
    report = evaluate_corpus(
        instances,
        profiles_for(ws, config.evaluation.tau),
        ws.store,
        tau_values=grid,
        jobs=config.workers,
    )

    out = run_dir(config, args.out)
    write_report_json(report, out / ArtifactNames.REPORT)
    write_tau_sweep_csv(report, out / ArtifactNames.TAU_SWEEP)
    if args.xlsx:
        write_report_xlsx(report, args.xlsx)
    print(format_report_table(report))
    return 0


def cmd_demo(args, config: EngineConfig) -> int:
    if args.ui:
        app = Path(__file__).resolve().parents[3] / "app.py"
        logger.info(f"Launching explorer: streamlit run {app}")
        return subprocess.call([sys.executable, "-m", "streamlit", "run", str(app)])

    WorkspaceOperations.build_index(config)
    ws = WorkspaceOperations.open(config, build_if_missing=False)
    out = run_dir(config, args.out)

    summary = {}
    variants = [("full", config), ("no_pruning", replace(config, ablation=replace(config.ablation, no_pruning=True)))]
    for name, variant in variants:
        report = evaluate_variant(ws, variant)
        write_report_json(report, out / f"demo_{name}.json")
        summary[name] = {"f_ehr": report.f_ehr, "p_ehr": report.p_ehr}
        print(f"{name:<11} F-EHR {report.f_ehr:.4f}  P-EHR {report.p_ehr:.4f}")
    write_json(out / "demo_summary.json", summary)
    return 0


def parse_sweep_values(param: str, raw: Sequence[str]) -> List:
    if param not in SWEEP_PARAMS:
        raise KGExplainError(f"Unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    cast = SWEEP_PARAMS[param][2]
    try:
        return [cast(v) for v in raw]
    except ValueError as e:
        raise KGExplainError(f"Invalid value for {param}: {e}") from e


def cmd_sweep(args, config: EngineConfig) -> int:
    values = parse_sweep_values(args.param, args.values)
    section, key, _ = SWEEP_PARAMS[args.param]
    ws = WorkspaceOperations.open(config)

    rows = []
    for value in values:
        variant = config.with_overrides({section: {key: value}}).validate()
        report = evaluate_variant(ws, variant)
        rows.append({"param": args.param, "value": value, "f_ehr": report.f_ehr, "p_ehr": report.p_ehr, "scoreable": report.scoreable})
        print(f"{args.param}={value}: F-EHR {report.f_ehr:.4f}  P-EHR {report.p_ehr:.4f}")

    frame = pd.DataFrame(rows, columns=["param", "value", "f_ehr", "p_ehr", "scoreable"])
    write_text(run_dir(config, args.out) / ArtifactNames.SWEEP, frame.to_csv(index=False, lineterminator="\n"))
    return 0


COMMANDS = {
    "index": cmd_index,
    "retrieve": cmd_retrieve,
    "explain": cmd_explain,
    "eval": cmd_eval,
    "demo": cmd_demo,
    "sweep": cmd_sweep,
}
