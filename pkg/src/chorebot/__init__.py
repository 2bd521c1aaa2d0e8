"""chorebot: dialog-guided household agent at desk scale.

A symbolic multi-room simulator, a text-to-text multitask seq2seq model with
frame/visual sentinel tokens, the route/act/search agent loop, synthetic data
pipelines, a benchmark harness, and an interactive session service.
"""

__version__ = "0.1.0"
