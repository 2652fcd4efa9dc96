"""Evidence retrieval: intent, specificity, path enumeration, scoring and MMR."""
