//! Fault-localization toolkit for a small imperative language (IMPX).
//!
//! The pipeline: parse a program, build per-function control-flow graphs
//! annotated with definitions and uses, derive the static testing
//! requirements (all-nodes, all-edges, all-uses), execute a test suite
//! under an instrumented interpreter to collect line and
//! definition-use-association spectra, rank suspicious elements with ten
//! metrics, and evaluate data-flow against control-flow spectra by
//! inspected-line cost with nonparametric statistics.

pub mod cfg;
pub mod dataflow;
pub mod eval;
pub mod lang;
pub mod metrics;
pub mod runner;
pub mod spectra;
pub mod timing;

pub use lang::LangError;

/// Parses, checks, and validates reachability of every function.
pub fn load_program(source: &str, source_path: &str) -> Result<lang::Program, LangError> {
    let program = lang::parse(source, source_path)?;
    for func in &program.functions {
        let graph = cfg::build_cfg(func);
        let unreachable = graph.unreachable_nodes();
        if let Some(&node) = unreachable.first() {
            let line = graph
                .block(node)
                .first_line()
                .unwrap_or(func.signature_line);
            return Err(LangError::Static {
                line,
                msg: format!("unreachable code in function `{}`", func.name),
            });
        }
    }
    Ok(program)
}

/// Builds the annotated CFG and requirement set for one function.
pub fn requirements_for(
    program: &lang::Program,
    function: &str,
    ba_dua_compat: bool,
) -> Result<(cfg::Cfg, dataflow::RequirementSet), LangError> {
    let func = program
        .function(function)
        .ok_or_else(|| LangError::UnknownFunction(function.to_string()))?;
    let graph = cfg::annotate_def_use(cfg::build_cfg(func), func);
    let reqs = dataflow::all_uses_with(&graph, ba_dua_compat);
    Ok((graph, reqs))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn load_program_rejects_unreachable_join_blocks() {
        let src = "\
int f(int x)
{
    if (x > 0)
    {
        return 1;
    }
    else
    {
        return 2;
    }
    x = 3;
    return x;
}
";
        let err = load_program(src, "f.impx").unwrap_err();
        assert!(err.to_string().contains("unreachable code"));
    }

    #[test]
    fn requirements_for_unknown_function_errors() {
        let program = load_program("int f(int x) { return x; }", "f.impx").unwrap();
        assert!(requirements_for(&program, "nosuch", false).is_err());
    }
}
