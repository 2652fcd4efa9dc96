"""
kgexplain Evidence Explorer - Streamlit entry point.

Run with:  streamlit run app.py
"""

import os
import sys

# Add src directory to Python path for imports
src_dir = os.path.join(os.path.dirname(__file__), 'src')
sys.path.insert(0, src_dir)

import streamlit as st

from kgexplain.pages.evidence_explorer import DEFAULT_CONFIG, evidence_explorer_page


def main():
    st.set_page_config(page_title="kgexplain Evidence Explorer", layout="wide")
    config_path = os.environ.get("KGEXPLAIN_CONFIG", os.path.join(os.path.dirname(__file__), DEFAULT_CONFIG))
    evidence_explorer_page(config_path)


if __name__ == "__main__":
    main()
