"""
kgexplain: knowledge-graph evidence selection for explainable
recommendation, with factual and preference hallucination metrics.
"""
__version__ = "0.1.0"
