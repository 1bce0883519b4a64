from .expr import (
    Add, Const, Cos, Div, Exp, Expr, Mul, Neg, Pow, Sin, Sub, Time, Var,
    evaluate, evaluate_on, to_string,
)
from .canonical import diff_expr, equivalent, is_zero, simplify
from .parser import (
    ExprError, ExprSyntaxError, UnknownIdentifierError, VariableRangeError, parse_expr,
)
from .operators import (
    DimensionMismatch, FirstOrderOperator, adjoint_zeroth, columns_as_operators,
    hormander_drift, lie_bracket,
)
from .hormander import (
    Generation, HormanderCertificate, NotSatisfied, build_generations, check_hormander,
    eta_for, torus_sample_grid,
)

__all__ = [
    "Add", "Const", "Cos", "Div", "Exp", "Expr", "Mul", "Neg", "Pow", "Sin", "Sub", "Time",
    "Var", "evaluate", "evaluate_on", "to_string", "diff_expr", "equivalent", "is_zero",
    "simplify", "ExprError", "ExprSyntaxError", "UnknownIdentifierError",
    "VariableRangeError", "parse_expr", "DimensionMismatch", "FirstOrderOperator",
    "adjoint_zeroth", "columns_as_operators", "hormander_drift", "lie_bracket",
    "Generation", "HormanderCertificate", "NotSatisfied", "build_generations",
    "check_hormander", "eta_for", "torus_sample_grid",
]
