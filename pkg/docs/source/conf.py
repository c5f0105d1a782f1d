# type: ignore
# Sphinx configuration for the hierselect documentation.

from __future__ import annotations

import sys
from pathlib import Path

# autodoc imports the package from the checkout, not an installed copy.
sys.path.insert(0, str(Path(__file__).resolve().parent.parent.parent))


project = "hierselect"
copyright = "2026, hierselect developers"
author = "hierselect developers"

extensions = [
    "myst_parser",
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "hoverxref.extension",
    "sphinx_design",
]

templates_path = ["_templates"]
exclude_patterns = []

html_theme = "furo"
html_static_path = ["_static"]

autodoc_class_signature = "separated"
autodoc_member_order = "bysource"

hoverxref_roles = ["term"]

myst_enable_extensions = [
    "amsmath",
    "colon_fence",
    "deflist",
    "dollarmath",
    "substitution",
]
