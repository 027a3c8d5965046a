//! Closed-form fields written as arithmetic expressions in `x1`, `x2` and
//! (for forcing terms) `t`.
//!
//! Recognised names besides the coordinates: `pi`, and the one-argument
//! functions `sin cos tan exp ln sqrt abs sinh cosh tanh atan`. Integer
//! literals use integer arithmetic, so `1/2` is `0`; write `0.5`.

use evalexpr::{Context, EvalexprError, EvalexprResult, Node, Value};
use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Expression {
    source: String,
    tree: Node,
}

struct Vars {
    x1: Value,
    x2: Value,
    t: Value,
    pi: Value,
}

impl Context for Vars {
    fn get_value(&self, identifier: &str) -> Option<&Value> {
        match identifier {
            "x1" => Some(&self.x1),
            "x2" => Some(&self.x2),
            "t" => Some(&self.t),
            "pi" => Some(&self.pi),
            _ => None,
        }
    }

    fn call_function(&self, identifier: &str, argument: &Value) -> EvalexprResult<Value> {
        let f: fn(f64) -> f64 = match identifier {
            "sin" => f64::sin,
            "cos" => f64::cos,
            "tan" => f64::tan,
            "exp" => f64::exp,
            "ln" => f64::ln,
            "sqrt" => f64::sqrt,
            "abs" => f64::abs,
            "sinh" => f64::sinh,
            "cosh" => f64::cosh,
            "tanh" => f64::tanh,
            "atan" => f64::atan,
            _ => return Err(EvalexprError::FunctionIdentifierNotFound(identifier.to_string())),
        };
        Ok(Value::Float(f(argument.as_number()?)))
    }

    fn are_builtin_functions_disabled(&self) -> bool {
        false
    }

    fn set_builtin_functions_disabled(&mut self, _disabled: bool) -> EvalexprResult<()> {
        Err(EvalexprError::CustomMessage("read-only context".into()))
    }
}

impl Expression {
    /// Parses `source` and checks that it only reads the given variables.
    pub fn parse(source: &str, variables: &[&str]) -> Result<Self, String> {
        let tree = evalexpr::build_operator_tree(source).map_err(|e| format!("cannot parse `{source}`: {e}"))?;
        for name in tree.iter_variable_identifiers() {
            if name != "pi" && !variables.contains(&name) {
                return Err(format!("unknown variable `{name}` in `{source}` (allowed: {})", variables.join(", ")));
            }
        }
        let expr = Self { source: source.to_string(), tree };
        let probe = expr.try_eval(0.5, 0.5, 0.0)?;
        if !probe.is_finite() {
            log::debug!("`{source}` is not finite at the probe point");
        }
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    fn try_eval(&self, x1: f64, x2: f64, t: f64) -> Result<f64, String> {
        let vars = Vars { x1: Value::Float(x1), x2: Value::Float(x2), t: Value::Float(t), pi: Value::Float(PI) };
        self.tree.eval_number_with_context(&vars).map_err(|e| format!("cannot evaluate `{}`: {e}", self.source))
    }

    /// Evaluation errors surface as NaN, which the integrators reject.
    pub fn eval(&self, x1: f64, x2: f64, t: f64) -> f64 {
        self.try_eval(x1, x2, t).unwrap_or(f64::NAN)
    }
}
