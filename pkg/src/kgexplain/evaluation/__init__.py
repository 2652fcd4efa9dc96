"""Faithfulness evaluation: F-EHR and P-EHR."""
