"""Model-based reconfiguration of hybrid systems via qualitative abstraction and SAT."""
