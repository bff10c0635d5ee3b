"""JSON Schemas for every JSON document the command line writes."""

SCHEMA_VERSION = 1

_num = {"type": "number"}
_int = {"type": "integer"}
_str = {"type": "string"}
_bool = {"type": "boolean"}


def _doc(properties: dict, required: list[str] | None = None) -> dict:
    props = {"schema_version": {"const": SCHEMA_VERSION}, "command": _str, **properties}
    return {
        "type": "object",
        "properties": props,
        "required": ["schema_version", "command", *(required or list(properties))],
        "additionalProperties": False,
    }


_gap_stats = {
    "type": "object",
    "properties": {
        "count": _int,
        "density": _num,
        "max_gap": _int,
        "positive_count": _int,
        "positive_density": {"type": ["number", "null"]},
        "positive_max_gap": _int,
    },
    "required": ["count", "density", "max_gap", "positive_count", "positive_density"],
}

_branch = lambda key: {  # noqa: E731
    "type": "object",
    "properties": {key: _num, "threshold": _num, "holds": _bool},
    "required": [key, "threshold", "holds"],
}

SCHEMAS = {
    "profile": _doc(
        {
            "polynomial": {"type": "array", "items": _int},
            "universe_size": _int,
            "set_cardinality": _int,
            "rows": {
                "type": "array",
                "items": {
                    "type": "object",
                    "properties": {"n": _int, "Pn": _int, "count": _int, "ratio": _num},
                    "required": ["n", "Pn", "count", "ratio"],
                },
            },
        }
    ),
    "returns": _doc(
        {
            "epsilon": _str,
            "range_end": _int,
            "times": {"type": "array", "items": _int},
            "stats": _gap_stats,
        }
    ),
    "weyl eval": _doc({"re": _num, "im": _num, "abs": _num, "alpha": _str, "mu": _int, "lambda": _int, "q": _int}),
    "weyl relations": _doc({"max_r1": _num, "max_r2": _num, "max_r3": _num, "samples": _int}),
    "weyl scan": _doc({"max_abs": _num, "argmax_alpha": _str, "kept": _int, "discarded": _int}),
    "arcs member": _doc(
        {"alpha": _str, "q": _int, "in_outer": _bool, "in_inner": _bool, "in_omega": _bool, "pulled_back": _bool}
    ),
    "arcs overlap": _doc({"alpha": _str, "count": _int, "windows": {"type": "array"}}),
    "spectral identity": _doc({"direct": _num, "quadrature": _num, "relative_error": _num, "grid": {"type": "array", "items": _int}}),
    "spectral mass": _doc({"mass": _num, "riemann": {"type": ["number", "null"]}, "boxes": _int, "pulled_back": _bool}),
    "dichotomy": _doc(
        {
            "branch1": _branch("count"),
            "branch2": _branch("mass"),
            "q": _int,
            "density": _num,
            "either": _bool,
        }
    ),
    "lift": _doc(
        {
            "j": _int,
            "modulus": _int,
            "origin": {"type": "array", "items": _int},
            "tile_side": _int,
            "n_prime": _int,
            "lifted_cardinality": _int,
            "q_size": _int,
            "b_prime_size": _int,
            "tiles": _int,
            "q_prime_size": _int,
            "b_double_prime_size": _int,
            "candidates_tried": _int,
            "verified": _bool,
        }
    ),
    "counterexample build": _doc(
        {
            "a": _int,
            "M": _int,
            "L": _int,
            "period": _int,
            "block": {"type": "array", "items": _int, "minItems": 2, "maxItems": 2},
            "lambda_formula": _str,
        }
    ),
    "counterexample verify": _doc({"verified": _bool, "j_max": _int, "a": _int, "M": _int}),
    "experiment khintchine": _doc(
        {
            "generator": _str,
            "N": _int,
            "polynomial": {"type": "array", "items": _int},
            "epsilon": _str,
            "range_end": _int,
            "seed": _int,
            "trials": {"type": "array"},
            "min_density": _num,
            "mean_density": _num,
        }
    ),
}
