//! Line-oriented text formats for instances, matchings and coalitions.
//!
//! ```text
//! # comment
//! students i1 i2 i3
//! schools s1 s2 s3
//! capacity s2 2
//! pref i1: s1 = s2 > s3
//! prio s1: i1 > i3 > i2
//! ```
//!
//! Capacities default to 1. `>` separates indifference classes and `=`
//! joins members of one class. Matchings are `i1: s2` lines with `-` for
//! unassigned; coalitions are `loop i1 -> i4 -> i2 -> i1` lines with an
//! optional `accomplices i5` line.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::instance::{Idx, Instance, Matching, SchoolId, StudentId, WeakOrder};

#[derive(Clone, Debug, PartialEq, Eq)]
struct Token<'a> {
    text: &'a str,
    column: usize,
}

/// Splits a line into identifiers and the punctuation `> = : -> ,`.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    let chars: Vec<(usize, char)> = line.char_indices().collect();
    let mut k = 0;
    while k < chars.len() {
        let (byte, c) = chars[k];
        let column = k + 1;
        if c == '#' {
            break;
        }
        let punct_len = if line[byte..].starts_with("->") {
            2
        } else if matches!(c, '>' | '=' | ':' | ',') {
            1
        } else {
            0
        };
        if c.is_whitespace() || punct_len > 0 {
            if let Some((b, col)) = start.take() {
                out.push(Token {
                    text: &line[b..byte],
                    column: col,
                });
            }
            if punct_len > 0 {
                out.push(Token {
                    text: &line[byte..byte + punct_len],
                    column,
                });
            }
            k += punct_len.max(1);
            continue;
        }
        if start.is_none() {
            start = Some((byte, column));
        }
        k += 1;
    }
    if let Some((b, col)) = start {
        out.push(Token {
            text: &line[b..],
            column: col,
        });
    }
    out
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

fn is_ident(t: &str) -> bool {
    !matches!(t, ">" | "=" | ":" | "->" | ",")
}

/// Parses `name: a > b = c` bodies into classes of indices.
fn parse_order(
    tokens: &[Token<'_>],
    line: usize,
    end_column: usize,
    lookup: impl Fn(&str) -> Option<usize>,
    kind: &str,
) -> Result<Vec<Vec<usize>>> {
    let mut classes: Vec<Vec<usize>> = vec![Vec::new()];
    let mut expect_ident = true;
    for t in tokens {
        if expect_ident {
            if !is_ident(t.text) {
                return Err(parse_err(line, t.column, format!("expected {kind} id, found `{}`", t.text)));
            }
            let id = lookup(t.text)
                .ok_or_else(|| parse_err(line, t.column, format!("undeclared {kind} `{}`", t.text)))?;
            classes.last_mut().expect("nonempty").push(id);
            expect_ident = false;
        } else {
            match t.text {
                ">" => classes.push(Vec::new()),
                "=" => {}
                other => {
                    return Err(parse_err(line, t.column, format!("expected `>` or `=`, found `{other}`")))
                }
            }
            expect_ident = true;
        }
    }
    if expect_ident {
        let column = tokens.last().map_or(end_column, |t| t.column);
        return Err(parse_err(line, column, format!("expected {kind} id at end of order")));
    }
    Ok(classes)
}

/// Parses an instance without checking its invariants.
///
/// Students and schools must be declared before they are referenced.
/// Missing `pref` or `prio` lines leave empty orders, which
/// [`Instance::validate`] reports as incomplete.
pub fn parse_instance_unchecked(text: &str) -> Result<Instance> {
    let mut students: Option<Vec<String>> = None;
    let mut schools: Option<Vec<String>> = None;
    let mut capacity: Vec<Option<u32>> = Vec::new();
    let mut prefs: Vec<Option<WeakOrder<SchoolId>>> = Vec::new();
    let mut prios: Vec<Option<WeakOrder<StudentId>>> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let tokens = tokenize(raw);
        let Some(head) = tokens.first() else { continue };
        let end_column = raw.chars().count() + 1;
        match head.text {
            "students" | "schools" => {
                let names: Vec<String> = tokens[1..]
                    .iter()
                    .map(|t| {
                        if is_ident(t.text) {
                            Ok(t.text.to_string())
                        } else {
                            Err(parse_err(line, t.column, format!("unexpected `{}`", t.text)))
                        }
                    })
                    .collect::<Result<_>>()?;
                let slot = if head.text == "students" { &mut students } else { &mut schools };
                if slot.is_some() {
                    return Err(parse_err(line, head.column, format!("`{}` declared twice", head.text)));
                }
                if head.text == "students" {
                    prefs = vec![None; names.len()];
                } else {
                    capacity = vec![None; names.len()];
                    prios = vec![None; names.len()];
                }
                *slot = Some(names);
            }
            "capacity" => {
                let names = schools
                    .as_ref()
                    .ok_or_else(|| parse_err(line, head.column, "`capacity` before `schools`"))?;
                let (Some(s), Some(c)) = (tokens.get(1), tokens.get(2)) else {
                    return Err(parse_err(line, end_column, "expected `capacity <school> <seats>`"));
                };
                if let Some(extra) = tokens.get(3) {
                    return Err(parse_err(line, extra.column, "trailing input"));
                }
                let k = names
                    .iter()
                    .position(|x| x == s.text)
                    .ok_or_else(|| parse_err(line, s.column, format!("undeclared school `{}`", s.text)))?;
                let seats: u32 = c
                    .text
                    .parse()
                    .map_err(|_| parse_err(line, c.column, format!("invalid seat count `{}`", c.text)))?;
                if capacity[k].replace(seats).is_some() {
                    return Err(parse_err(line, head.column, format!("capacity of `{}` given twice", s.text)));
                }
            }
            "pref" | "prio" => {
                let is_pref = head.text == "pref";
                let (owners, members, owner_kind, member_kind) = if is_pref {
                    (&students, &schools, "student", "school")
                } else {
                    (&schools, &students, "school", "student")
                };
                let owners = owners.as_ref().ok_or_else(|| {
                    parse_err(line, head.column, format!("`{}` before `{owner_kind}s`", head.text))
                })?;
                let members = members.as_ref().ok_or_else(|| {
                    parse_err(line, head.column, format!("`{}` before `{member_kind}s`", head.text))
                })?;
                let Some(owner) = tokens.get(1).filter(|t| is_ident(t.text)) else {
                    return Err(parse_err(line, end_column, format!("expected {owner_kind} id")));
                };
                let k = owners.iter().position(|x| x == owner.text).ok_or_else(|| {
                    parse_err(line, owner.column, format!("undeclared {owner_kind} `{}`", owner.text))
                })?;
                match tokens.get(2) {
                    Some(t) if t.text == ":" => {}
                    Some(t) => return Err(parse_err(line, t.column, "expected `:`")),
                    None => return Err(parse_err(line, end_column, "expected `:`")),
                }
                let classes = parse_order(
                    &tokens[3..],
                    line,
                    end_column,
                    |name| members.iter().position(|x| x == name),
                    member_kind,
                )?;
                let dup = if is_pref {
                    prefs[k]
                        .replace(WeakOrder::new(
                            classes
                                .into_iter()
                                .map(|c| c.into_iter().map(SchoolId).collect())
                                .collect(),
                        ))
                        .is_some()
                } else {
                    prios[k]
                        .replace(WeakOrder::new(
                            classes
                                .into_iter()
                                .map(|c| c.into_iter().map(StudentId).collect())
                                .collect(),
                        ))
                        .is_some()
                };
                if dup {
                    return Err(parse_err(
                        line,
                        owner.column,
                        format!("second `{}` line for `{}`", head.text, owner.text),
                    ));
                }
            }
            other => {
                return Err(parse_err(line, head.column, format!("unknown directive `{other}`")));
            }
        }
    }

    let students = students.ok_or_else(|| parse_err(1, 1, "missing `students` line"))?;
    let schools = schools.ok_or_else(|| parse_err(1, 1, "missing `schools` line"))?;
    Ok(Instance::from_parts(
        students,
        schools,
        capacity.into_iter().map(|c| c.unwrap_or(1)).collect(),
        prefs
            .into_iter()
            .map(|p| p.unwrap_or_else(|| WeakOrder::new(Vec::new())))
            .collect(),
        prios
            .into_iter()
            .map(|p| p.unwrap_or_else(|| WeakOrder::new(Vec::new())))
            .collect(),
    ))
}

/// Parses and validates an instance.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let instance = parse_instance_unchecked(text)?;
    let violations = instance.validate();
    if violations.is_empty() {
        Ok(instance)
    } else {
        Err(Error::InvalidInstance(violations))
    }
}

fn write_order<T: Idx>(out: &mut String, order: &WeakOrder<T>, name: impl Fn(T) -> String) {
    for (c, class) in order.classes().iter().enumerate() {
        if c > 0 {
            out.push_str(" >");
        }
        for (k, &x) in class.iter().enumerate() {
            out.push_str(if k > 0 { " = " } else { " " });
            out.push_str(&name(x));
        }
    }
}

/// Canonical text: declarations, non-unit capacities, then `pref` and
/// `prio` lines in id order.
pub fn serialize_instance(instance: &Instance) -> String {
    let mut out = String::new();
    out.push_str("students");
    for n in instance.student_names() {
        let _ = write!(out, " {n}");
    }
    out.push_str("\nschools");
    for n in instance.school_names() {
        let _ = write!(out, " {n}");
    }
    out.push('\n');
    for s in instance.schools() {
        if instance.capacity(s) != 1 {
            let _ = writeln!(out, "capacity {} {}", instance.school_name(s), instance.capacity(s));
        }
    }
    for i in instance.students() {
        let _ = write!(out, "pref {}:", instance.student_name(i));
        write_order(&mut out, instance.pref(i), |s| instance.school_name(s).to_string());
        out.push('\n');
    }
    for s in instance.schools() {
        let _ = write!(out, "prio {}:", instance.school_name(s));
        write_order(&mut out, instance.prio(s), |i| instance.student_name(i).to_string());
        out.push('\n');
    }
    out
}

/// Parses `student: school` lines (`-` for unassigned). Every student must
/// appear exactly once; the result is checked against capacities.
pub fn parse_matching(instance: &Instance, text: &str) -> Result<Matching> {
    let mut slots: Vec<Option<Option<SchoolId>>> = vec![None; instance.num_students()];
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let tokens = tokenize(raw);
        if tokens.is_empty() {
            continue;
        }
        let end_column = raw.chars().count() + 1;
        let student = &tokens[0];
        let i = instance
            .student_by_name(student.text)
            .ok_or_else(|| parse_err(line, student.column, format!("unknown student `{}`", student.text)))?;
        match tokens.get(1) {
            Some(t) if t.text == ":" => {}
            Some(t) => return Err(parse_err(line, t.column, "expected `:`")),
            None => return Err(parse_err(line, end_column, "expected `:`")),
        }
        let Some(school) = tokens.get(2) else {
            return Err(parse_err(line, end_column, "expected school id or `-`"));
        };
        if let Some(extra) = tokens.get(3) {
            return Err(parse_err(line, extra.column, "trailing input"));
        }
        let value = if school.text == "-" {
            None
        } else {
            Some(instance.school_by_name(school.text).ok_or_else(|| {
                parse_err(line, school.column, format!("unknown school `{}`", school.text))
            })?)
        };
        if slots[i.0].replace(value).is_some() {
            return Err(parse_err(line, student.column, format!("`{}` assigned twice", student.text)));
        }
    }
    if let Some(k) = slots.iter().position(|s| s.is_none()) {
        return Err(Error::InvalidMatching(format!(
            "no line for student {}",
            instance.student_name(StudentId(k))
        )));
    }
    let matching = Matching::new(slots.into_iter().map(|s| s.expect("checked")).collect());
    matching.validate(instance)?;
    Ok(matching)
}

pub fn serialize_matching(instance: &Instance, matching: &Matching) -> String {
    let mut out = String::new();
    for i in instance.students() {
        let school = matching.get(i).map_or("-", |s| instance.school_name(s));
        let _ = writeln!(out, "{}: {school}", instance.student_name(i));
    }
    out
}

/// A coalition as written in a file: loops in arrow form (each student
/// takes the seat of the one after them) and an optional explicit
/// accomplice list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoalitionSpec {
    pub arrows: Vec<Vec<StudentId>>,
    pub accomplices: Option<Vec<StudentId>>,
}

pub fn parse_coalition(instance: &Instance, text: &str) -> Result<CoalitionSpec> {
    let mut arrows = Vec::new();
    let mut accomplices: Option<Vec<StudentId>> = None;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let tokens = tokenize(raw);
        let Some(head) = tokens.first() else { continue };
        let end_column = raw.chars().count() + 1;
        let student = |t: &Token<'_>| {
            instance
                .student_by_name(t.text)
                .ok_or_else(|| parse_err(line, t.column, format!("unknown student `{}`", t.text)))
        };
        match head.text {
            "loop" => {
                let mut members = Vec::new();
                let mut expect_ident = true;
                for t in &tokens[1..] {
                    if expect_ident {
                        members.push(student(t)?);
                    } else if t.text != "->" {
                        return Err(parse_err(line, t.column, "expected `->`"));
                    }
                    expect_ident = !expect_ident;
                }
                if expect_ident || members.len() < 2 {
                    return Err(parse_err(line, end_column, "loop must read `a -> b -> ... -> a`"));
                }
                if members.first() != members.last() {
                    let t = tokens.last().expect("nonempty");
                    return Err(parse_err(line, t.column, "loop must end where it starts"));
                }
                members.pop();
                arrows.push(members);
            }
            "accomplices" => {
                let list = tokens[1..]
                    .iter()
                    .filter(|t| t.text != ",")
                    .map(student)
                    .collect::<Result<Vec<_>>>()?;
                if accomplices.replace(list).is_some() {
                    return Err(parse_err(line, head.column, "`accomplices` given twice"));
                }
            }
            other => return Err(parse_err(line, head.column, format!("unknown directive `{other}`"))),
        }
    }
    Ok(CoalitionSpec { arrows, accomplices })
}
