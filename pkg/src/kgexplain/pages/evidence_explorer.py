"""
Streamlit evidence explorer: pick a user and target, toggle ablations, and
inspect intent weights, selected paths, the prompt and the stub explanation
with its faithfulness scores.
"""
from dataclasses import replace
from pathlib import Path

import pandas as pd
import streamlit as st

from kgexplain.config.constants import ABLATION_FLAGS
from kgexplain.config.settings import load_config
from kgexplain.errors import KGExplainError
from kgexplain.evaluation.features import extract_features
from kgexplain.evaluation.metrics import EvalInstance, feature_verdicts, rates_from_verdicts
from kgexplain.evaluation.preference import build_profile
from kgexplain.explain.generation import StubGenerator
from kgexplain.explain.pipeline import Explainer
from kgexplain.kg.catalog import item_features
from kgexplain.retrieval.export import paths_frame
from kgexplain.retrieval.pipeline import EvidenceRetriever
from kgexplain.workspace import WorkspaceOperations

DEFAULT_CONFIG = "data/toy/config.toml"


@st.cache_resource(show_spinner="Loading index...")
def _open_workspace(config_path: str):
    config = load_config(config_path).validate()
    return WorkspaceOperations.open(config)


def _sidebar(ws):
    st.sidebar.title("Evidence Explorer")
    users = sorted(ws.histories)
    user_id = st.sidebar.selectbox("User", users)
    history = ws.histories[user_id]
    items = sorted(ws.catalog.items)
    default = items.index(history.target_item) if history.target_item in items else 0
    target = st.sidebar.selectbox("Target item", items, index=default, format_func=ws.catalog.title)

    st.sidebar.markdown("---")
    st.sidebar.markdown("### Ablations")
    ablations = {name: st.sidebar.checkbox(name, help=text) for name, text in ABLATION_FLAGS.items()}
    strategy = st.sidebar.radio("Strategy", ["preference", "flat"], horizontal=True)
    gamma = st.sidebar.slider("gamma", 0.0, 1.0, float(ws.config.retrieval.gamma), 0.05)
    tau = st.sidebar.slider("tau", 0.0, 1.0, float(ws.config.evaluation.tau), 0.05)
    return user_id, target, ablations, strategy, gamma, tau


def evidence_explorer_page(config_path: str = DEFAULT_CONFIG):
    """Main explorer page."""
    if not Path(config_path).is_file():
        st.error(f"Config file not found: {config_path}")
        return
    try:
        ws = _open_workspace(config_path)
    except KGExplainError as e:
        st.error(f"✕ Could not open workspace: {e}")
        return

    user_id, target, ablations, strategy, gamma, tau = _sidebar(ws)
    config = replace(
        ws.config,
        ablation=replace(ws.config.ablation, **ablations),
        retrieval=replace(ws.config.retrieval, strategy=strategy, gamma=gamma),
    )

    st.title("Evidence Explorer")
    st.markdown(f"**User:** {user_id} &nbsp;&nbsp; **Target:** {ws.catalog.title(target)}")
    st.markdown("---")

    try:
        explainer = Explainer(EvidenceRetriever(ws, config), StubGenerator())
        explanation = explainer.explain(user_id, target)
    except KGExplainError as e:
        st.error(f"✕ {e}")
        return
    result = explanation.retrieval

    col1, col2 = st.columns(2)
    with col1:
        st.subheader("Intent weights")
        if result.intent is not None:
            weights = pd.DataFrame({
                "item": [ws.catalog.title(i) for i in result.intent.history_items],
                "weight": result.intent.weights,
            })
            st.dataframe(weights, hide_index=True)
        else:
            st.info("No intent (flat strategy or no-KG ablation)")
    with col2:
        st.subheader("Retrieval")
        st.write("**Candidates:**", result.candidates)
        st.write("**Truncated:**", result.truncated)
        st.write("**Effective gamma:**", result.gamma)
        st.write("**Latency:**", f"{result.latency_ms:.1f} ms")

    st.subheader("Selected paths")
    st.dataframe(paths_frame([result], ws.graph), hide_index=True)

    with st.expander("Prompt", expanded=False):
        st.code(explanation.prompt.text)
        st.caption(f"sha256 {explanation.prompt.prompt_hash}")

    st.subheader("Explanation")
    st.write(explanation.text)

    vocab = sorted(ws.catalog.vocabulary())
    instance = EvalInstance(
        user_id=user_id,
        item_id=target,
        explanation=explanation.text,
        features=extract_features(explanation.text, vocab),
        item_features=item_features(ws.catalog, target),
    )
    profile = build_profile(ws.histories[user_id], ws.store, tau)
    verdicts = feature_verdicts(instance, profile, ws.store)
    rates = rates_from_verdicts(verdicts)
    if rates is None:
        st.info("The explanation mentions no catalogued feature (unscoreable).")
        return
    m1, m2 = st.columns(2)
    m1.metric("F-EHR", f"{rates['f_ehr']:.3f}")
    m2.metric("P-EHR", f"{rates['p_ehr']:.3f}")
    st.dataframe(pd.DataFrame([v.to_dict() for v in verdicts]), hide_index=True)
