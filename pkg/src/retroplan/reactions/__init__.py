"""Mapped reactions, centers, templates, synthetic negatives."""

from .negatives import generate_negatives
from .reaction import (
    Reaction,
    Side,
    load_corpus,
    parse_reaction_smiles,
    reaction_center,
    write_corpus,
)
from .templates import (
    ReactionTemplate,
    TemplateLibrary,
    apply_template_forward,
    apply_template_retro,
    combine_molecules,
    extract_template,
    find_embeddings,
    parse_template,
    two_sided_key,
)

__all__ = [
    "Reaction",
    "ReactionTemplate",
    "Side",
    "TemplateLibrary",
    "apply_template_forward",
    "apply_template_retro",
    "combine_molecules",
    "extract_template",
    "find_embeddings",
    "generate_negatives",
    "load_corpus",
    "parse_reaction_smiles",
    "parse_template",
    "reaction_center",
    "two_sided_key",
    "write_corpus",
]
