# Copyright 2024 The sturmian Developers
# SPDX-License-Identifier: Apache-2.0

# sturmian documentation build configuration file.
#
# This file is execfile()d with the current directory set to its
# containing dir.
#
# All configuration values have a default; values that are commented out
# serve to show the default.

import datetime
import sys
from pathlib import Path
from typing import Dict

import sphinx_rtd_theme  # noqa: F401 # pytype: disable=import-error

# If extensions (or modules to document with autodoc) are in another directory,
# add these directories to sys.path here.
repo_root = Path(__file__).resolve().parent.parent.parent


def syspath_insert(pth: Path):
    print(f"Inserting {pth}")
    sys.path.insert(0, str(pth))


syspath_insert(repo_root)


# region -- General configuration ------------------------------------------------

needs_sphinx = "3.2"

extensions = [
    "sphinx.ext.intersphinx",
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx_rtd_theme",
]
# IMPORTANT: If you edit the above list, check if you need to edit the deps list
# in `requirements.txt`

templates_path = ["_templates"]

source_suffix = ".rst"

master_doc = "index"

author = "The sturmian Developers"
project = "sturmian"
# noinspection PyShadowingBuiltins
copyright = f"2024-{datetime.datetime.now().year}, {author}"

from sturmian import __version__  # noqa: E402

release = __version__
version = __version__

language = "en"

today_fmt = "%Y-%m-%d"

exclude_patterns = [".git*", "*.py", "*.txt", "Makefile"]

pygments_style = "sphinx"

modindex_common_prefix = ["sturmian."]

autodoc_member_order = "bysource"

rst_prolog = f"""
.. |author| replace:: {author}
.. |copyright| replace:: {copyright}
"""

# endregion

# region -- Extensions configuration ---------------------------------------------

intersphinx_mapping = {
    "python": ("https://docs.python.org/3", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
}

# endregion

# region -- Options for HTML output ----------------------------------------------

html_theme = "sphinx_rtd_theme"

htmlhelp_basename = "sturmiandoc"

# endregion

# region -- Options for LaTeX output ---------------------------------------------

latex_elements: Dict[str, str] = {}

latex_documents = [
    ("index", "sturmian.tex", "sturmian Documentation", author, "manual"),
]

# endregion

# region -- Options for manual page output ---------------------------------------

man_pages = [
    (
        "manpage",
        "sturmian",
        "bulk-boundary correspondence for quasiperiodic chains",
        [author],
        1,
    ),
]

# endregion
