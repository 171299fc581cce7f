# Sphinx configuration for the pole-decoherence documentation.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import sys
from os.path import abspath, dirname

# Document this checkout rather than an installed copy.
sys.path.insert(1, dirname(dirname(abspath(__file__))))


# -- Project information -------------------------------------------------------

project = "pole-decoherence"
copyright = "2024, Zach Gannon"
author = "Zach Gannon"
release = "0.0.1"

# -- General configuration -----------------------------------------------------

needs_sphinx = "4.5.0"

extensions = [
    "sphinx.ext.intersphinx",
    "sphinx.ext.autodoc",
    "sphinx.ext.coverage",
    "sphinx.ext.autosummary",
    "sphinx.ext.doctest",
    "sphinx.ext.mathjax",
]

source_suffix = ".rst"
root_doc = "index"
master_doc = "index"

# Sphinx 5.2+ would add every function and class to the table of contents.
toc_object_entries = False

today_fmt = "%B %d, %Y"
exclude_patterns = ["_build", "_theme", "requirements.txt"]
add_function_parentheses = True
add_module_names = False
show_authors = False
pygments_style = "trac"

intersphinx_mapping = {
    "python": ("https://docs.python.org/3/", None),
    "numpy": ("https://numpy.org/doc/stable/", None),
    "scipy": ("https://docs.scipy.org/doc/scipy/", None),
    "pandas": ("https://pandas.pydata.org/docs/", None),
    "click": ("https://click.palletsprojects.com/en/stable/", None),
}
intersphinx_cache_limit = 90  # days

# -- Options for HTML output ---------------------------------------------------

html_theme = "furo"
html_last_updated_fmt = "%b %d, %Y"

# The docs build installs only sphinx and the theme.
autodoc_mock_imports = ["numpy", "scipy", "pandas", "click", "tomli"]
