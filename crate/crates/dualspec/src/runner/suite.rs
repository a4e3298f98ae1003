//! Test-suite files (`.tests`): one test per line,
//! `name ; function ; arg,arg,... ; expected`, arrays written `[1,2,3]`,
//! expected either an integer or `ERROR`. Blank lines and lines starting
//! with `#` are skipped.

use super::RunnerError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ArgValue {
    Int(i64),
    Array(Vec<i64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expected {
    Value(i64),
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestCase {
    pub name: String,
    pub function: String,
    pub args: Vec<ArgValue>,
    pub expected: Expected,
}

pub fn parse_suite(text: &str) -> Result<Vec<TestCase>, RunnerError> {
    let mut tests = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(';').map(str::trim).collect();
        if parts.len() != 4 {
            return Err(RunnerError::SuiteFormat {
                line: line_no,
                msg: format!("expected 4 `;`-separated fields, found {}", parts.len()),
            });
        }
        let name = parts[0].to_string();
        let function = parts[1].to_string();
        if name.is_empty() || function.is_empty() {
            return Err(RunnerError::SuiteFormat {
                line: line_no,
                msg: "test name and function must be non-empty".into(),
            });
        }
        let args = parse_args(parts[2], line_no)?;
        let expected = if parts[3] == "ERROR" {
            Expected::Error
        } else {
            Expected::Value(
                parts[3]
                    .parse::<i64>()
                    .map_err(|_| RunnerError::SuiteFormat {
                        line: line_no,
                        msg: format!("expected integer or ERROR, found `{}`", parts[3]),
                    })?,
            )
        };
        tests.push(TestCase {
            name,
            function,
            args,
            expected,
        });
    }
    Ok(tests)
}

fn parse_args(field: &str, line_no: usize) -> Result<Vec<ArgValue>, RunnerError> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(Vec::new());
    }
    let mut args = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    let bytes = field.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'[' => depth += 1,
            b']' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| RunnerError::SuiteFormat {
                        line: line_no,
                        msg: "unbalanced `]` in arguments".into(),
                    })?
            }
            b',' if depth == 0 => {
                args.push(parse_arg(&field[start..i], line_no)?);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(RunnerError::SuiteFormat {
            line: line_no,
            msg: "unbalanced `[` in arguments".into(),
        });
    }
    args.push(parse_arg(&field[start..], line_no)?);
    Ok(args)
}

fn parse_arg(text: &str, line_no: usize) -> Result<ArgValue, RunnerError> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('[') {
        let inner = inner
            .strip_suffix(']')
            .ok_or_else(|| RunnerError::SuiteFormat {
                line: line_no,
                msg: format!("malformed array literal `{text}`"),
            })?;
        let inner = inner.trim();
        if inner.is_empty() {
            return Ok(ArgValue::Array(Vec::new()));
        }
        let items = inner
            .split(',')
            .map(|item| {
                item.trim()
                    .parse::<i64>()
                    .map_err(|_| RunnerError::SuiteFormat {
                        line: line_no,
                        msg: format!("malformed array element `{}`", item.trim()),
                    })
            })
            .collect::<Result<Vec<i64>, _>>()?;
        Ok(ArgValue::Array(items))
    } else {
        text.parse::<i64>()
            .map(ArgValue::Int)
            .map_err(|_| RunnerError::SuiteFormat {
                line: line_no,
                msg: format!("malformed argument `{text}`"),
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_style_suite_parses() {
        let text = "\
# max test suite
t1 ; max ; [1,2,3],3 ; 3
t5 ; max ; [4],1 ; 4

t6 ; max ; [], 0 ; ERROR
";
        let tests = parse_suite(text).unwrap();
        assert_eq!(tests.len(), 3);
        assert_eq!(
            tests[0].args,
            vec![ArgValue::Array(vec![1, 2, 3]), ArgValue::Int(3)]
        );
        assert_eq!(tests[1].expected, Expected::Value(4));
        assert_eq!(
            tests[2].args,
            vec![ArgValue::Array(vec![]), ArgValue::Int(0)]
        );
        assert_eq!(tests[2].expected, Expected::Error);
    }

    #[test]
    fn negative_values_parse() {
        let tests = parse_suite("t ; f ; -3,[-1,-2] ; -1").unwrap();
        assert_eq!(
            tests[0].args,
            vec![ArgValue::Int(-3), ArgValue::Array(vec![-1, -2])]
        );
        assert_eq!(tests[0].expected, Expected::Value(-1));
    }

    #[test]
    fn empty_args_field_means_no_args() {
        let tests = parse_suite("t ; f ;  ; 0").unwrap();
        assert!(tests[0].args.is_empty());
    }

    #[test]
    fn malformed_lines_report_their_line_number() {
        let err = parse_suite("t1 ; max ; [1,2,3],3 ; 3\nbad line").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }
}
