"""Jinja2 environment for the LaTeX report templates.

Templates use ``<VAR>``/``<BLOCK>``/``<COMMENT>`` delimiters so that LaTeX
braces and percent signs pass through untouched.
"""

from functools import cache
from pathlib import Path

from jinja2 import Environment, FileSystemLoader, Template

RESULTS_TABLE = "results_table.tex"

_TEX_SPECIALS = {
    "\\": r"\textbackslash{}",
    "&": r"\&",
    "%": r"\%",
    "$": r"\$",
    "#": r"\#",
    "_": r"\_",
    "{": r"\{",
    "}": r"\}",
}


def tex_escape(value: object) -> str:
    """Escape LaTeX special characters in free text such as problem names."""
    return "".join(_TEX_SPECIALS.get(ch, ch) for ch in str(value))


def sci3(value: float | None) -> str:
    """Four significant digits in LaTeX-friendly E notation; None renders as a dash."""
    return "--" if value is None else f"{value:.3E}"


@cache
def _environment() -> Environment:
    env = Environment(
        loader=FileSystemLoader(Path(__file__).parent),
        autoescape=False,
        variable_start_string="<VAR>",
        variable_end_string="</VAR>",
        block_start_string="<BLOCK>",
        block_end_string="</BLOCK>",
        comment_start_string="<COMMENT>",
        comment_end_string="</COMMENT>",
        trim_blocks=True,
        lstrip_blocks=True,
        keep_trailing_newline=True,
        finalize=lambda x: x if x is not None else "",
    )
    env.filters["tex"] = tex_escape
    env.filters["sci3"] = sci3
    return env


def load_template(name: str) -> Template:
    """Load a report template by file name from this package."""
    return _environment().get_template(name)


def load_results_table_template() -> Template:
    """Load the LaTeX results-table template."""
    return load_template(RESULTS_TABLE)
