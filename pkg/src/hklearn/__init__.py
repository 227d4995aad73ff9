"""Heat kernel learning: kernel-induced measures, the JKO objective and its outer loop."""
