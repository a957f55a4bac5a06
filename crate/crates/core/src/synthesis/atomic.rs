//! Static atomic decomposition of generated Python tools.
//!
//! Every top-level `def` becomes one candidate. Nested helpers stay with
//! their parent. Module-level imports and constant assignments are copied in
//! front of each candidate so it can be loaded on its own.

use serde_json::Map;

use super::{ProposedTestExample, ProposedTool, SynthesisError};
use crate::registry::IoDescription;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionBlock {
    pub name: String,
    pub params: Vec<String>,
    /// Decorators, signature and body, without trailing blank lines.
    pub text: String,
    pub doc_first_line: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LineKind {
    /// Continuation of an earlier statement, or indented body.
    Inner,
    Blank,
    Def,
    Decorator,
    Prelude,
    OtherTop,
}

/// Lexer state carried across lines: open triple quote and bracket depth.
#[derive(Default)]
struct Scanner {
    triple: Option<&'static str>,
    depth: i32,
}

impl Scanner {
    fn at_statement_start(&self) -> bool {
        self.triple.is_none() && self.depth == 0
    }

    fn consume(&mut self, line: &str) {
        let bytes = line.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if let Some(q) = self.triple {
                if line[i..].starts_with(q) {
                    self.triple = None;
                    i += 3;
                } else {
                    i += if bytes[i] == b'\\' { 2 } else { 1 };
                }
                continue;
            }
            match bytes[i] {
                b'#' => break,
                b'(' | b'[' | b'{' => self.depth += 1,
                b')' | b']' | b'}' => self.depth = (self.depth - 1).max(0),
                q @ (b'"' | b'\'') => {
                    let triple: &'static str = if q == b'"' { "\"\"\"" } else { "'''" };
                    if line[i..].starts_with(triple) {
                        self.triple = Some(triple);
                        i += 3;
                        continue;
                    }
                    // Single-line string literal.
                    i += 1;
                    while i < bytes.len() && bytes[i] != q {
                        i += if bytes[i] == b'\\' { 2 } else { 1 };
                    }
                }
                _ => {}
            }
            i += 1;
        }
    }
}

fn is_assignment(line: &str) -> bool {
    let ident_end = line
        .find(|c: char| !(c.is_alphanumeric() || c == '_'))
        .unwrap_or(line.len());
    if ident_end == 0 || line.as_bytes()[0].is_ascii_digit() {
        return false;
    }
    let rest = line[ident_end..].trim_start();
    let rest = match rest.strip_prefix(':') {
        Some(annotated) => match annotated.find('=') {
            Some(eq) => &annotated[eq..],
            None => return false,
        },
        None => rest,
    };
    rest.starts_with('=') && !rest.starts_with("==")
}

fn classify(line: &str, at_start: bool) -> LineKind {
    if !at_start {
        return LineKind::Inner;
    }
    if line.trim().is_empty() {
        return LineKind::Blank;
    }
    if line.starts_with([' ', '\t']) || line.starts_with('#') {
        return LineKind::Inner;
    }
    if line.starts_with("def ") || line.starts_with("async def ") {
        LineKind::Def
    } else if line.starts_with('@') {
        LineKind::Decorator
    } else if line.starts_with("import ") || line.starts_with("from ") || is_assignment(line) {
        LineKind::Prelude
    } else {
        LineKind::OtherTop
    }
}

fn parse_signature(header: &str) -> (String, Vec<String>) {
    let after_def = header
        .trim_start_matches("async ")
        .trim_start_matches("def ")
        .trim_start();
    let name: String = after_def
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_')
        .collect();
    let params = after_def
        .find('(')
        .and_then(|open| {
            let mut depth = 0;
            for (j, c) in after_def[open..].char_indices() {
                match c {
                    '(' | '[' | '{' => depth += 1,
                    ')' | ']' | '}' => {
                        depth -= 1;
                        if depth == 0 {
                            return Some(&after_def[open + 1..open + j]);
                        }
                    }
                    _ => {}
                }
            }
            None
        })
        .map(split_params)
        .unwrap_or_default();
    (name, params)
}

fn split_params(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut current = String::new();
    for c in list.chars() {
        match c {
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut current));
                continue;
            }
            _ => {}
        }
        current.push(c);
    }
    out.push(current);
    out.into_iter()
        .filter_map(|p| {
            let p = p.trim();
            let name: String = p
                .trim_start_matches('*')
                .chars()
                .take_while(|c| c.is_alphanumeric() || *c == '_')
                .collect();
            (!name.is_empty() && name != "self").then_some(name)
        })
        .collect()
}

fn docstring_first_line(block: &str) -> Option<String> {
    // The signature ends at the first ':' that closes the header; the
    // docstring must be the first statement after it.
    let mut scanner = Scanner::default();
    let mut header_end = None;
    let mut offset = 0;
    for line in block.split_inclusive('\n') {
        let is_def =
            line.trim_start().starts_with("def ") || line.trim_start().starts_with("async def ");
        if header_end.is_none() && (is_def || scanner.depth > 0) {
            scanner.consume(line);
            if scanner.depth == 0 {
                header_end = Some(offset + line.len());
            }
        }
        offset += line.len();
        if header_end.is_some() {
            break;
        }
    }
    let body = block[header_end?..].trim_start();
    let quote = ["\"\"\"", "'''", "\"", "'"]
        .into_iter()
        .find(|q| body.starts_with(q))?;
    let inner = &body[quote.len()..];
    let inner = inner.find(quote).map_or(inner, |end| &inner[..end]);
    inner
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty())
        .map(str::to_string)
}

/// Top-level function blocks plus the shared prelude (imports and constant
/// assignments).
pub fn scan_source(source: &str) -> (Vec<FunctionBlock>, String) {
    let lines: Vec<&str> = source.lines().collect();
    let mut kinds = Vec::with_capacity(lines.len());
    let mut scanner = Scanner::default();
    for line in &lines {
        kinds.push(classify(line, scanner.at_statement_start()));
        scanner.consume(line);
    }

    let mut prelude = Vec::new();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        match kinds[i] {
            LineKind::Prelude => {
                prelude.push(lines[i]);
                i += 1;
                while i < lines.len()
                    && kinds[i] == LineKind::Inner
                    && lines[i].starts_with([' ', '\t', ')', ']', '}'])
                {
                    prelude.push(lines[i]);
                    i += 1;
                }
            }
            LineKind::Decorator | LineKind::Def => {
                let start = i;
                while i < lines.len() && kinds[i] == LineKind::Decorator {
                    i += 1;
                }
                if i >= lines.len() || kinds[i] != LineKind::Def {
                    continue;
                }
                let def_line = i;
                i += 1;
                while i < lines.len() && matches!(kinds[i], LineKind::Inner | LineKind::Blank) {
                    i += 1;
                }
                let mut end = i;
                while end > start && lines[end - 1].trim().is_empty() {
                    end -= 1;
                }
                let text = lines[start..end].join("\n");
                let (name, params) = parse_signature(&lines[def_line..end].join("\n"));
                let doc_first_line = docstring_first_line(&lines[start..end].join("\n"));
                blocks.push(FunctionBlock {
                    name,
                    params,
                    text,
                    doc_first_line,
                });
            }
            _ => i += 1,
        }
    }
    (blocks, prelude.join("\n"))
}

/// Splits `proposed` into one candidate per top-level function. Each
/// candidate also carries the sibling functions it calls.
///
/// A single-function source maps to itself unchanged. Otherwise each
/// candidate's description is its docstring's first line followed by the
/// parent description; the candidate named like the parent inherits the
/// parent's test example and I/O description.
pub fn atomic_decompose(proposed: &ProposedTool) -> Result<Vec<ProposedTool>, SynthesisError> {
    let (blocks, prelude) = scan_source(&proposed.source);
    match blocks.len() {
        0 => Err(SynthesisError::NoFunctionFound(proposed.name.clone())),
        1 => Ok(vec![proposed.clone()]),
        _ => {
            let closures: Vec<Vec<usize>> = (0..blocks.len())
                .map(|i| call_closure(&blocks, i))
                .collect();
            let texts: Vec<String> = blocks.iter().map(|b| b.text.clone()).collect();
            Ok(blocks
                .into_iter()
                .zip(closures)
                .map(|(block, deps)| {
                    let body = deps
                        .iter()
                        .map(|&d| texts[d].as_str())
                        .collect::<Vec<_>>()
                        .join("\n\n\n");
                    let source = if prelude.is_empty() {
                        format!("{body}\n")
                    } else {
                        format!("{prelude}\n\n\n{body}\n")
                    };
                    let description = match &block.doc_first_line {
                        Some(doc) => format!("{doc} {}", proposed.text_description)
                            .trim()
                            .to_string(),
                        None => proposed.text_description.clone(),
                    };
                    let inherits = block.name == proposed.name;
                    ProposedTool {
                        sub_question: proposed.sub_question.clone(),
                        name: block.name,
                        source,
                        text_description: description,
                        io_description: if inherits {
                            proposed.io_description.clone()
                        } else {
                            IoDescription {
                                input: block.params.join(", "),
                                output: String::new(),
                            }
                        },
                        test_example: if inherits {
                            proposed.test_example.clone()
                        } else {
                            ProposedTestExample {
                                input: Map::new(),
                                result: serde_json::Value::Null,
                            }
                        },
                        error: None,
                    }
                })
                .collect())
        }
    }
}

fn calls(text: &str, name: &str) -> bool {
    let mut rest = text;
    while let Some(at) = rest.find(name) {
        let before_ok = rest[..at]
            .chars()
            .next_back()
            .is_none_or(|c| !(c.is_alphanumeric() || c == '_' || c == '.'));
        let after = rest[at + name.len()..].trim_start();
        if before_ok && after.starts_with('(') {
            return true;
        }
        rest = &rest[at + name.len()..];
    }
    false
}

/// Indices of block `root` and every sibling it calls, transitively, in
/// source order, so each candidate runs on its own.
fn call_closure(blocks: &[FunctionBlock], root: usize) -> Vec<usize> {
    let mut keep = vec![false; blocks.len()];
    keep[root] = true;
    let mut stack = vec![root];
    while let Some(i) = stack.pop() {
        // Skip the block's own signature line when looking for calls.
        let body = blocks[i].text.split_once('\n').map_or("", |(_, b)| b);
        for (j, other) in blocks.iter().enumerate() {
            if !keep[j] && calls(body, &other.name) {
                keep[j] = true;
                stack.push(j);
            }
        }
    }
    (0..blocks.len()).filter(|&i| keep[i]).collect()
}

/// Parameter names of `function_name` in `source`, if it is defined at top level.
pub fn function_params(source: &str, function_name: &str) -> Option<Vec<String>> {
    scan_source(source)
        .0
        .into_iter()
        .find(|b| b.name == function_name)
        .map(|b| b.params)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn proposed(name: &str, source: &str) -> ProposedTool {
        ProposedTool {
            sub_question: "q".into(),
            name: name.into(),
            source: source.into(),
            text_description: "parent description".into(),
            io_description: IoDescription {
                input: "a".into(),
                output: "b".into(),
            },
            test_example: ProposedTestExample::default(),
            error: None,
        }
    }

    const TWO: &str = r#"import math

R = 8.314462618  # J/(mol*K)


def molar_volume(pressure_pa, temperature_k):
    """
    Compute molar volume Vm under the ideal gas law: Vm = RT/P.
    """
    return R * temperature_k / pressure_pa * 1000.0


@staticmethod
def molar_mass(density_g_per_l, molar_volume_l):
    '''Molar mass from density and molar volume.'''
    text = """
not a def
def fake(x):
"""
    return density_g_per_l * molar_volume_l

print(molar_mass(1.0, 2.0))
"#;

    #[test]
    fn two_functions_give_two_candidates() {
        let out = atomic_decompose(&proposed("molar_mass", TWO)).unwrap();
        let names: Vec<_> = out.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(names, vec!["molar_volume", "molar_mass"]);
        assert!(out[0].source.starts_with("import math\nR = 8.314462618"));
        assert!(out[1].source.contains("@staticmethod\ndef molar_mass"));
        assert!(out[1].source.contains("def fake(x):"));
        assert!(!out[1].source.contains("print("));
        assert_eq!(
            out[0].text_description,
            "Compute molar volume Vm under the ideal gas law: Vm = RT/P. parent description"
        );
        assert_eq!(out[0].io_description.input, "pressure_pa, temperature_k");
        assert_eq!(out[1].io_description.input, "a");
        // Hand count of `def` at column 0 outside strings.
        assert_eq!(
            TWO.lines().filter(|l| l.starts_with("def ")).count() - 1,
            out.len()
        );
    }

    #[test]
    fn single_function_is_identity() {
        let src = "def f(x):\n    return x\n";
        let p = proposed("f", src);
        assert_eq!(atomic_decompose(&p).unwrap(), vec![p]);
    }

    #[test]
    fn nested_helper_stays_inside() {
        let src = "def outer(x):\n    def helper(y):\n        return y + 1\n    return helper(x)\n";
        let out = atomic_decompose(&proposed("outer", src)).unwrap();
        assert_eq!(out.len(), 1);
        assert!(out[0].source.contains("def helper"));
    }

    #[test]
    fn no_function_is_an_error() {
        assert!(matches!(
            atomic_decompose(&proposed("x", "x = 1\n")),
            Err(SynthesisError::NoFunctionFound(_))
        ));
    }

    #[test]
    fn multi_line_signature() {
        let src = "def f(\n    a,\n    b=(1, 2),\n    *args,\n    **kw,\n):\n    \"\"\"Doc line.\"\"\"\n    return a\n\ndef g(z):\n    return z\n";
        let (blocks, _) = scan_source(src);
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].params, vec!["a", "b", "args", "kw"]);
        assert_eq!(blocks[0].doc_first_line.as_deref(), Some("Doc line."));
        assert_eq!(function_params(src, "g"), Some(vec!["z".to_string()]));
    }

    #[test]
    fn candidates_carry_called_siblings() {
        let src = "import math\n\ndef helper(x):\n    return math.sqrt(x)\n\ndef main_tool(x):\n    return helper(x) + 1\n\ndef other(y):\n    return y.helper_like(2)\n";
        let out = atomic_decompose(&proposed("main_tool", src)).unwrap();
        let by_name = |n: &str| out.iter().find(|t| t.name == n).unwrap().source.clone();
        assert!(by_name("main_tool").contains("def helper(x):"));
        assert!(
            by_name("main_tool").find("def helper").unwrap()
                < by_name("main_tool").find("def main_tool").unwrap()
        );
        assert!(!by_name("helper").contains("def main_tool"));
        assert!(!by_name("other").contains("def helper"));
    }

    proptest::proptest! {
        #[test]
        fn every_function_appears_exactly_once(n in 1usize..6, nested in proptest::collection::vec(proptest::bool::ANY, 6)) {
            let mut src = String::from("import math\n\n");
            for (i, &has_inner) in nested.iter().enumerate().take(n) {
                src.push_str(&format!("def fn_{i}(x):\n    \"\"\"Doc {i}.\"\"\"\n"));
                if has_inner {
                    src.push_str(&format!("    def inner_{i}(y):\n        return y\n"));
                }
                src.push_str("    return x\n\n");
            }
            let out = atomic_decompose(&proposed("fn_0", &src)).unwrap();
            proptest::prop_assert!(!out.is_empty());
            let all: String = out.iter().map(|t| t.source.as_str()).collect();
            for i in 0..n {
                let header = format!("def fn_{i}(x):");
                proptest::prop_assert_eq!(all.matches(header.as_str()).count(), 1);
            }
        }
    }
}
