//! Build-file model reader and runner (semantic stage of the mini-XML target).
//!
//! Reads a `<project>` document into a model of properties, paths, task
//! definitions and targets; resolves every cross-reference; then runs the
//! default target (or all targets) against a simulated file system.

use super::parser::Element;
use crate::coverage::CoverageRecorder;
use crate::targets::Rejection;
use std::collections::{BTreeMap, BTreeSet};

pub(super) const SEMANTIC_SITES: u16 = 125;

const MAX_CALL_DEPTH: usize = 8;
const ECHO_LEVELS: &[&str] = &["error", "warning", "info", "verbose", "debug"];

type Result<T> = std::result::Result<T, Rejection>;

#[derive(Debug)]
enum Task {
    Echo { message: String },
    Mkdir { dir: String },
    Copy { file: String, to: String },
    Javac { srcdir: String, destdir: Option<String>, classpath: Option<String>, debug: Option<bool> },
    Antcall { target: String },
    Property { name: String, value: String },
    Delete { path: String },
    Custom { kind: String },
}

#[derive(Debug)]
struct BuildTarget {
    name: String,
    depends: Vec<String>,
    if_property: Option<String>,
    unless_property: Option<String>,
    tasks: Vec<Task>,
}

#[derive(Debug, Default)]
struct Project<'d> {
    default: Option<String>,
    descriptions: [String; 1],
    description_count: usize,
    properties: BTreeMap<String, String>,
    paths: BTreeMap<String, Vec<String>>,
    taskdefs: BTreeMap<String, String>,
    targets: Vec<BuildTarget>,
    target_index: BTreeMap<String, usize>,
    augments: Vec<&'d Element>,
}

fn reject<T>(reason: impl Into<String>) -> Result<T> {
    Err(Rejection::semantic(reason))
}

fn is_blank(s: &str) -> bool {
    s.chars().all(char::is_whitespace)
}

fn only_attributes(cov: &mut CoverageRecorder, site: u16, el: &Element, allowed: &[&str]) -> Result<()> {
    let unknown = el.attributes.iter().find(|(k, _)| !allowed.contains(&k.as_str()));
    if cov.sem(site, unknown.is_some()) {
        return reject(format!("unknown attribute `{}` on <{}>", unknown.unwrap().0, el.name));
    }
    Ok(())
}

fn required<'e>(cov: &mut CoverageRecorder, site: u16, el: &'e Element, key: &str) -> Result<&'e str> {
    match el.attr(key) {
        Some(v) if cov.sem(site, !v.is_empty()) => Ok(v),
        _ => reject(format!("<{}> requires `{key}`", el.name)),
    }
}

/// Nested elements of leaf elements are ignored.
fn no_children(cov: &mut CoverageRecorder, site: u16, el: &Element) -> Result<()> {
    cov.sem(site, el.elements().next().is_some());
    Ok(())
}

fn read_property(cov: &mut CoverageRecorder, el: &Element) -> Result<(String, String)> {
    only_attributes(cov, 0, el, &["name", "value", "location"])?;
    no_children(cov, 1, el)?;
    let name = required(cov, 2, el, "name")?.to_string();
    let value = match (el.attr("value"), el.attr("location")) {
        (Some(v), None) => {
            cov.sem_hit(3);
            v
        }
        (None, Some(l)) => {
            cov.sem_hit(4);
            l
        }
        _ => {
            cov.sem_hit(5);
            return reject("<property> needs exactly one of value/location");
        }
    };
    Ok((name, value.to_string()))
}

fn read_path(cov: &mut CoverageRecorder, el: &Element) -> Result<(String, Vec<String>)> {
    only_attributes(cov, 6, el, &["id"])?;
    let id = required(cov, 7, el, "id")?.to_string();
    let mut entries = Vec::new();
    for child in el.elements() {
        match child.name.as_str() {
            "pathelement" => {
                only_attributes(cov, 8, child, &["location"])?;
                no_children(cov, 9, child)?;
                entries.push(required(cov, 10, child, "location")?.to_string());
            }
            "fileset" => {
                only_attributes(cov, 11, child, &["dir"])?;
                let dir = required(cov, 12, child, "dir")?;
                let mut any = false;
                for inc in child.elements() {
                    if cov.sem(13, inc.name != "include") {
                        return reject("<fileset> only takes <include>");
                    }
                    only_attributes(cov, 14, inc, &["name"])?;
                    entries.push(format!("{dir}/{}", required(cov, 15, inc, "name")?));
                    any = true;
                }
                if !cov.sem(16, any) {
                    entries.push(dir.to_string());
                }
            }
            other => {
                cov.sem_hit(17);
                return reject(format!("<path> cannot contain <{other}>"));
            }
        }
    }
    cov.sem(18, entries.is_empty());
    Ok((id, entries))
}

fn read_task(cov: &mut CoverageRecorder, el: &Element, taskdefs: &BTreeMap<String, String>) -> Result<Task> {
    let task = match el.name.as_str() {
        "echo" => {
            only_attributes(cov, 19, el, &["message", "level"])?;
            no_children(cov, 20, el)?;
            if let Some(level) = el.attr("level") {
                if cov.sem(21, !ECHO_LEVELS.contains(&level)) {
                    return reject(format!("bad echo level `{level}`"));
                }
            }
            let message = match el.attr("message") {
                Some(m) => {
                    cov.sem_hit(22);
                    m.to_string()
                }
                None => el.text(),
            };
            Task::Echo { message }
        }
        "mkdir" => {
            only_attributes(cov, 23, el, &["dir"])?;
            no_children(cov, 24, el)?;
            Task::Mkdir { dir: required(cov, 25, el, "dir")?.to_string() }
        }
        "copy" => {
            only_attributes(cov, 26, el, &["file", "tofile", "todir"])?;
            no_children(cov, 27, el)?;
            let file = required(cov, 28, el, "file")?.to_string();
            let to = match (el.attr("tofile"), el.attr("todir")) {
                (Some(f), None) => f.to_string(),
                (None, Some(d)) => {
                    cov.sem_hit(29);
                    format!("{d}/{file}")
                }
                _ => {
                    cov.sem_hit(30);
                    return reject("<copy> needs exactly one of tofile/todir");
                }
            };
            Task::Copy { file, to }
        }
        "javac" => {
            only_attributes(cov, 31, el, &["srcdir", "destdir", "classpathref", "debug"])?;
            no_children(cov, 32, el)?;
            let srcdir = match el.attr("srcdir") {
                Some(dir) if cov.sem(33, dir.is_empty()) => return reject("`srcdir` must not be empty"),
                Some(dir) => dir.to_string(),
                None => "src".to_string(),
            };
            // Ant-style boolean: anything but true/on/yes is false
            let debug = el.attr("debug").map(|v| cov.sem(34, matches!(v, "true" | "on" | "yes")));
            Task::Javac {
                srcdir,
                destdir: el.attr("destdir").map(String::from),
                classpath: el.attr("classpathref").map(String::from),
                debug,
            }
        }
        "antcall" => {
            only_attributes(cov, 36, el, &["target"])?;
            no_children(cov, 37, el)?;
            Task::Antcall { target: required(cov, 38, el, "target")?.to_string() }
        }
        "property" => {
            let (name, value) = read_property(cov, el)?;
            Task::Property { name, value }
        }
        "delete" => {
            only_attributes(cov, 39, el, &["file", "dir"])?;
            no_children(cov, 40, el)?;
            match (el.attr("file"), el.attr("dir")) {
                (Some(p), None) | (None, Some(p)) => Task::Delete { path: p.to_string() },
                _ => {
                    cov.sem_hit(41);
                    return reject("<delete> needs exactly one of file/dir");
                }
            }
        }
        other if cov.sem(42, taskdefs.contains_key(other)) => Task::Custom { kind: other.to_string() },
        other => return reject(format!("unknown task <{other}>")),
    };
    Ok(task)
}

fn read_target(cov: &mut CoverageRecorder, el: &Element, taskdefs: &BTreeMap<String, String>) -> Result<BuildTarget> {
    only_attributes(cov, 43, el, &["name", "depends", "if", "unless"])?;
    let name = required(cov, 44, el, "name")?.to_string();
    let mut depends = Vec::new();
    if let Some(list) = el.attr("depends") {
        for item in list.split(',').map(str::trim) {
            if cov.sem(45, item.is_empty()) {
                return reject("empty name in `depends`");
            }
            depends.push(item.to_string());
        }
    }
    if cov.sem(46, !is_blank(&el.text())) {
        return reject("<target> cannot contain text");
    }
    let mut tasks = Vec::new();
    for child in el.elements() {
        tasks.push(read_task(cov, child, taskdefs)?);
    }
    cov.sem(47, tasks.is_empty());
    Ok(BuildTarget {
        name,
        depends,
        if_property: el.attr("if").map(String::from),
        unless_property: el.attr("unless").map(String::from),
        tasks,
    })
}

fn read_project<'d>(cov: &mut CoverageRecorder, root: &'d Element) -> Result<Project<'d>> {
    if !cov.sem(48, root.name == "project") {
        return reject(format!("root element must be <project>, got <{}>", root.name));
    }
    only_attributes(cov, 49, root, &["name", "default", "basedir"])?;
    let mut project = Project {
        default: root.attr("default").map(String::from),
        ..Project::default()
    };
    cov.sem(50, project.default.is_some());
    if cov.sem(51, !is_blank(&root.text())) {
        return reject("<project> cannot contain text");
    }
    // task definitions are visible to every target regardless of order
    for el in root.elements().filter(|e| e.name == "taskdef") {
        only_attributes(cov, 52, el, &["name", "classname"])?;
        let name = required(cov, 53, el, "name")?;
        let class = required(cov, 54, el, "classname")?;
        if cov.sem(55, project.taskdefs.insert(name.to_string(), class.to_string()).is_some()) {
            return reject(format!("task `{name}` defined twice"));
        }
    }
    for el in root.elements() {
        match el.name.as_str() {
            "description" => {
                if cov.sem(56, !el.attributes.is_empty()) {
                    return reject("<description> takes no attributes");
                }
                cov.sem_hit(57);
                project.descriptions[project.description_count] = el.text();
                project.description_count += 1;
            }
            "property" => {
                let (name, value) = read_property(cov, el)?;
                if cov.sem(58, project.properties.contains_key(&name)) {
                    continue;
                }
                project.properties.insert(name, value);
            }
            "path" => {
                let (id, entries) = read_path(cov, el)?;
                if cov.sem(59, project.paths.insert(id.clone(), entries).is_some()) {
                    return reject(format!("duplicate path id `{id}`"));
                }
            }
            "target" => {
                let target = read_target(cov, el, &project.taskdefs)?;
                if cov.sem(60, project.target_index.contains_key(&target.name)) {
                    return reject(format!("duplicate target `{}`", target.name));
                }
                project.target_index.insert(target.name.clone(), project.targets.len());
                project.targets.push(target);
            }
            "taskdef" => {}
            "augment" => {
                cov.sem_hit(61);
                project.augments.push(el);
            }
            other => {
                cov.sem_hit(62);
                return reject(format!("unexpected <{other}> in <project>"));
            }
        }
    }
    Ok(project)
}

fn resolve(cov: &mut CoverageRecorder, project: &mut Project<'_>) -> Result<()> {
    if let Some(default) = &project.default {
        if !cov.sem(63, project.target_index.contains_key(default)) {
            return reject(format!("default target `{default}` does not exist"));
        }
    }
    for target in &project.targets {
        for dep in &target.depends {
            if !cov.sem(64, project.target_index.contains_key(dep)) {
                return reject(format!("`{}` depends on unknown `{dep}`", target.name));
            }
        }
        for task in &target.tasks {
            match task {
                Task::Javac { classpath: Some(cp), .. } => {
                    if !cov.sem(65, project.paths.contains_key(cp)) {
                        return reject(format!("unknown classpathref `{cp}`"));
                    }
                }
                Task::Antcall { target: callee } => {
                    if !cov.sem(66, project.target_index.contains_key(callee)) {
                        return reject(format!("antcall of unknown target `{callee}`"));
                    }
                }
                _ => {}
            }
        }
    }
    // cycle check over `depends`, iterative three-colour DFS
    let n = project.targets.len();
    let mut colour = vec![0u8; n];
    for start in 0..n {
        if colour[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour[start] = 1;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let deps = &project.targets[node].depends;
            if *next < deps.len() {
                let dep = project.target_index[&deps[*next]];
                *next += 1;
                match colour[dep] {
                    0 => {
                        colour[dep] = 1;
                        stack.push((dep, 0));
                    }
                    1 => {
                        cov.sem_hit(67);
                        return reject("dependency cycle");
                    }
                    _ => {}
                }
            } else {
                colour[node] = 2;
                stack.pop();
            }
        }
    }
    if cov.sem(68, !project.augments.is_empty()) {
        if cov.sem(69, project.paths.is_empty()) {
            return reject("<augment> without any <path>");
        }
        for aug in std::mem::take(&mut project.augments) {
            cov.sem_hit(70);
            let id = aug.attr("id").unwrap();
            let Some(entries) = project.paths.get_mut(id) else {
                return reject(format!("<augment> of unknown id `{id}`"));
            };
            for child in aug.elements() {
                if cov.sem(71, child.name == "pathelement") {
                    entries.push(required(cov, 72, child, "location")?.to_string());
                }
            }
        }
    }
    Ok(())
}

struct Run<'p> {
    project: &'p Project<'p>,
    properties: BTreeMap<String, String>,
    files: BTreeSet<String>,
    dirs: BTreeSet<String>,
    executed: BTreeSet<usize>,
    tasks_run: usize,
    kinds_run: BTreeSet<&'static str>,
    max_depth: usize,
    log: Vec<String>,
}

impl Run<'_> {
    fn target(&mut self, cov: &mut CoverageRecorder, index: usize, depth: usize) -> Result<()> {
        if cov.sem(73, depth > MAX_CALL_DEPTH) {
            return reject("antcall nesting too deep");
        }
        self.max_depth = self.max_depth.max(depth);
        let target = &self.project.targets[index];
        for dep in &target.depends {
            let d = self.project.target_index[dep];
            if !cov.sem(74, self.executed.contains(&d)) {
                self.target(cov, d, depth)?;
            }
        }
        if !self.executed.insert(index) && cov.sem(75, depth == 0) {
            return Ok(());
        }
        if let Some(p) = &target.if_property {
            if !cov.sem(76, self.properties.contains_key(p)) {
                return Ok(());
            }
        }
        if let Some(p) = &target.unless_property {
            if cov.sem(77, self.properties.contains_key(p)) {
                return Ok(());
            }
        }
        for task in &target.tasks {
            self.task(cov, task, depth)?;
        }
        Ok(())
    }

    fn task(&mut self, cov: &mut CoverageRecorder, task: &Task, depth: usize) -> Result<()> {
        self.tasks_run += 1;
        match task {
            Task::Echo { message } => {
                self.kinds_run.insert("echo");
                cov.sem(78, message.is_empty());
                self.log.push(message.clone());
            }
            Task::Mkdir { dir } => {
                self.kinds_run.insert("mkdir");
                cov.sem(79, self.dirs.insert(dir.clone()));
            }
            Task::Copy { file, to } => {
                self.kinds_run.insert("copy");
                if cov.sem(80, self.files.contains(file)) {
                    self.files.insert(to.clone());
                } else {
                    self.log.push(format!("warning: {file} not found"));
                }
            }
            Task::Javac { srcdir, destdir, classpath, debug } => {
                self.kinds_run.insert("javac");
                let entries = classpath
                    .as_ref()
                    .map_or(0, |cp| self.project.paths[cp].len());
                cov.sem(81, entries == 0);
                cov.sem(82, entries >= 2);
                cov.sem(83, classpath.is_some());
                if let Some(flag) = debug {
                    // debug info goes next to the classes whether or not it is enabled
                    let level = if cov.sem(35, *flag) { "lines,vars,source" } else { "none" };
                    let out = destdir.as_ref().unwrap();
                    self.files.insert(format!("{out}/{srcdir}.{level}"));
                }
                if let Some(out) = destdir {
                    if cov.sem(84, self.dirs.contains(out)) {
                        self.files.insert(format!("{out}/{srcdir}.class"));
                    }
                }
                cov.sem(91, destdir.is_some());
            }
            Task::Antcall { target } => {
                self.kinds_run.insert("antcall");
                let index = self.project.target_index[target];
                let callee = &self.project.targets[index];
                if cov.sem(85, callee.tasks.is_empty()) {
                    self.log.push(format!("{target}: nothing to do"));
                }
                cov.sem(86, matches!(callee.tasks.first(), Some(Task::Echo { .. })));
                self.target(cov, index, depth + 1)?;
            }
            Task::Property { name, value } => {
                self.kinds_run.insert("property");
                if !cov.sem(87, self.properties.contains_key(name)) {
                    self.properties.insert(name.clone(), value.clone());
                }
            }
            Task::Delete { path } => {
                self.kinds_run.insert("delete");
                let removed = self.files.remove(path) | self.dirs.remove(path);
                cov.sem(88, removed);
            }
            Task::Custom { kind } => {
                self.kinds_run.insert("custom");
                cov.sem(89, self.project.taskdefs[kind].contains('.'));
            }
        }
        Ok(())
    }
}

fn run_project(cov: &mut CoverageRecorder, project: &Project<'_>) -> Result<()> {
    let mut run = Run {
        project,
        properties: project.properties.clone(),
        files: ["a.txt", "build.xml"].iter().map(|s| s.to_string()).collect(),
        dirs: BTreeSet::new(),
        executed: BTreeSet::new(),
        tasks_run: 0,
        kinds_run: BTreeSet::new(),
        max_depth: 0,
        log: Vec::new(),
    };
    match &project.default {
        Some(default) => {
            let index = project.target_index[default];
            run.target(cov, index, 0)?;
        }
        None => {
            for index in 0..project.targets.len() {
                if !cov.sem(90, run.executed.contains(&index)) {
                    run.target(cov, index, 0)?;
                }
            }
        }
    }
    // bucketed build profile
    let profile: [(usize, &[usize]); 8] = [
        (run.executed.len(), &[2, 3, 4, 6, 8]),
        (run.tasks_run, &[2, 4, 8, 16, 32]),
        (run.kinds_run.len(), &[2, 3, 4, 5, 6, 7]),
        (run.properties.len(), &[1, 2, 4, 8]),
        (run.dirs.len(), &[1, 2, 4]),
        (run.files.len(), &[3, 4, 6]),
        (run.max_depth, &[1, 2, 3]),
        (run.log.len(), &[1, 2, 4, 8]),
    ];
    let mut site = 92;
    for (value, thresholds) in profile {
        site = cov.sem_levels(site, value, thresholds);
    }
    debug_assert_eq!(site, SEMANTIC_SITES);
    Ok(())
}

/// Read, resolve and run a parsed build file.
pub fn analyze(root: &Element, cov: &mut CoverageRecorder) -> Result<()> {
    let mut project = read_project(cov, root)?;
    resolve(cov, &mut project)?;
    run_project(cov, &project)
}
