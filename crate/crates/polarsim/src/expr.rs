//! Initial-condition expressions.
//!
//! Expressions are arithmetic over the variables `x`, `y`, `pi`, `L`,
//! `u_star`, `v_star` and `lambda` with the functions `cos`, `sin`, `tan`,
//! `exp`, `ln`, `sqrt`, `abs`, `tanh`, `cosh`, `sinh`, `atan`, `min` and
//! `max`; `^` is exponentiation. Every numeric literal is read as a float,
//! so `1/2` is `0.5`.

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, EvalexprError,
    Function, HashMapContext, Node, Value,
};

use crate::CliError;

/// A parsed expression with its evaluation context.
pub struct Expression {
    source: String,
    tree: Node,
    context: HashMapContext,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self, CliError> {
        let tree = build_operator_tree(&float_literals(source))
            .map_err(|e| CliError::config(format!("cannot parse expression `{source}`: {e}")))?;
        let mut context = HashMapContext::new();
        install_functions(&mut context).map_err(CliError::config)?;
        Ok(Self {
            source: source.to_string(),
            tree,
            context,
        })
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.context
            .set_value(name.to_string(), Value::Float(value))
            .expect("float variables are always accepted");
    }

    pub fn eval(&self) -> Result<f64, CliError> {
        self.tree
            .eval_number_with_context(&self.context)
            .map_err(|e| CliError::config(format!("cannot evaluate `{}`: {e}", self.source)))
    }
}

/// Appends `.0` to integer literals so evalexpr never does integer math.
fn float_literals(src: &str) -> String {
    let chars: Vec<char> = src.chars().collect();
    let mut out = String::with_capacity(src.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let starts_number = c.is_ascii_digit()
            && (i == 0
                || !(chars[i - 1].is_alphanumeric() || chars[i - 1] == '_' || chars[i - 1] == '.'));
        if !starts_number {
            out.push(c);
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len() && chars[i].is_ascii_digit() {
            i += 1;
        }
        out.extend(&chars[start..i]);
        let continues = i < chars.len() && matches!(chars[i], '.' | 'e' | 'E');
        if !continues {
            out.push_str(".0");
        }
    }
    out
}

fn unary(f: fn(f64) -> f64) -> Function {
    Function::new(move |arg| Ok(Value::Float(f(arg.as_number()?))))
}

fn binary(f: fn(f64, f64) -> f64) -> Function {
    Function::new(move |arg| {
        let args = arg.as_fixed_len_tuple(2)?;
        Ok(Value::Float(f(args[0].as_number()?, args[1].as_number()?)))
    })
}

type Unary = fn(f64) -> f64;

fn install_functions(ctx: &mut HashMapContext) -> Result<(), EvalexprError> {
    let table: [(&str, Unary); 11] = [
        ("cos", f64::cos),
        ("sin", f64::sin),
        ("tan", f64::tan),
        ("exp", f64::exp),
        ("ln", f64::ln),
        ("sqrt", f64::sqrt),
        ("abs", f64::abs),
        ("tanh", f64::tanh),
        ("cosh", f64::cosh),
        ("sinh", f64::sinh),
        ("atan", f64::atan),
    ];
    for (name, f) in table {
        ctx.set_function(name.to_string(), unary(f))?;
    }
    ctx.set_function("min".to_string(), binary(f64::min))?;
    ctx.set_function("max".to_string(), binary(f64::max))?;
    ctx.set_value("pi".to_string(), Value::Float(std::f64::consts::PI))?;
    Ok(())
}
