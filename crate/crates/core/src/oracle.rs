//! Tree-based ground truth for conservation values.
//!
//! A configuration "viable prefix βB followed by a" is explored by building
//! every simplified tree with yield βBa whose ancestor chains repeat no
//! label more than twice per segment, and reading the conservation value of
//! each production off the nodes it labels. Nothing here consults the item
//! sets used by [`crate::validity`]; LR tables are used only to build full
//! parse trees from sentences and to tell a non-viable prefix apart.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::rc::Rc;

use thiserror::Error;

use crate::grammar::{Grammar, Production, Symbol};
use crate::lr1::{build_tables, restack, Action};
use crate::validity::ConservationMap;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("sentence is not in the language (stopped at token {position})")]
    NotInLanguage { position: usize },
    #[error("grammar is not LR(1)")]
    NotLr1,
    #[error("not a viable prefix (goto undefined at symbol {position})")]
    NotAViablePrefix { position: usize },
    #[error("prefix must be non-empty and end in a nonterminal")]
    PrefixNotAtNonterminal,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("tree boundary does not match: {0}")]
    BoundaryMismatch(String),
    #[error("more than {0} trees")]
    TooManyTrees(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Production(Production),
    Leaf(Symbol),
    Epsilon,
}

impl Label {
    fn head(&self) -> Option<&Symbol> {
        match self {
            Label::Production(p) => Some(&p.head),
            Label::Leaf(s) => Some(s),
            Label::Epsilon => None,
        }
    }
}

/// A tree as a value, used to build and compare trees.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Shape {
    Node(Production, Vec<Rc<Shape>>),
    Leaf(Symbol),
    Epsilon,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub label: Label,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
    pub depth: usize,
}

/// An ordered tree stored in preorder, so node indices follow the node order
/// (ancestors before descendants, left branches before right ones).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<Node>,
}

pub type ParseTree = Tree;

impl Tree {
    pub fn from_shape(shape: &Shape) -> Tree {
        let mut t = Tree { nodes: Vec::new() };
        t.push_shape(shape, None, 0);
        t
    }

    fn push_shape(&mut self, shape: &Shape, parent: Option<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        let label = match shape {
            Shape::Node(p, _) => Label::Production(p.clone()),
            Shape::Leaf(s) => Label::Leaf(s.clone()),
            Shape::Epsilon => Label::Epsilon,
        };
        self.nodes.push(Node { label, children: Vec::new(), parent, depth });
        if let Shape::Node(_, kids) = shape {
            for k in kids {
                let c = self.push_shape(k, Some(id), depth + 1);
                self.nodes[id].children.push(c);
            }
        }
        id
    }

    pub fn shape(&self, n: usize) -> Shape {
        match &self.nodes[n].label {
            Label::Production(p) => {
                Shape::Node(p.clone(), self.nodes[n].children.iter().map(|&c| Rc::new(self.shape(c))).collect())
            }
            Label::Leaf(s) => Shape::Leaf(s.clone()),
            Label::Epsilon => Shape::Epsilon,
        }
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, n: usize) -> &Node {
        &self.nodes[n]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        self.nodes.iter().map(|n| n.depth + 1).max().unwrap_or(0)
    }

    /// Strict ancestors of `n`, nearest first.
    pub fn ancestors(&self, n: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[n].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    pub fn is_ancestor(&self, anc: usize, n: usize) -> bool {
        let mut cur = self.nodes[n].parent;
        while let Some(p) = cur {
            if p == anc {
                return true;
            }
            cur = self.nodes[p].parent;
        }
        false
    }

    /// One past the last descendant of `n`.
    pub fn subtree_end(&self, n: usize) -> usize {
        let mut end = n + 1;
        while end < self.nodes.len() && self.is_ancestor(n, end) {
            end += 1;
        }
        end
    }

    /// Leaves in order, ε leaves excluded.
    pub fn leaves(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&n| matches!(self.nodes[n].label, Label::Leaf(_))).collect()
    }

    pub fn yield_symbols(&self) -> Vec<Symbol> {
        self.leaves()
            .into_iter()
            .filter_map(|n| match &self.nodes[n].label {
                Label::Leaf(s) => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    /// Every interior node's child labels spell its production body exactly.
    pub fn is_parse_complete(&self) -> bool {
        self.check_children(true)
    }

    /// Every interior node's child labels spell a prefix of its body.
    pub fn is_parse_proper(&self) -> bool {
        self.check_children(false)
    }

    fn check_children(&self, complete: bool) -> bool {
        self.nodes.iter().all(|n| {
            let Label::Production(p) = &n.label else { return n.children.is_empty() };
            let kids: Vec<&Label> = n.children.iter().map(|&c| &self.nodes[c].label).collect();
            if p.body.is_empty() {
                return kids.is_empty() || kids == [&Label::Epsilon];
            }
            if kids.len() > p.body.len() || (complete && kids.len() != p.body.len()) {
                return false;
            }
            kids.iter().zip(&p.body).all(|(k, s)| k.head() == Some(s))
        })
    }

    /// Indented dump, one node per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            let text = match &n.label {
                Label::Production(p) => p.to_string(),
                Label::Leaf(s) => s.to_string(),
                Label::Epsilon => "ε".to_string(),
            };
            let _ = writeln!(out, "{}{}", "  ".repeat(n.depth), text);
        }
        out
    }
}

/// A tree with yield βBa and its two boundary nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplifiedTree {
    pub tree: Tree,
    /// The leaf for B.
    pub b: usize,
    /// The leaf for the lookahead a.
    pub a: usize,
}

/// The production the tree root carries: `$accept -> S $end`.
pub fn root_production(g: &Grammar) -> Production {
    Production::new(Symbol::accept(), vec![g.start().clone(), Symbol::end()])
}

impl SimplifiedTree {
    /// Locates B and a as the last two leaves.
    pub fn from_tree(tree: Tree) -> Result<Self, OracleError> {
        let leaves = tree.leaves();
        if leaves.len() < 2 {
            return Err(OracleError::BoundaryMismatch("fewer than two leaves".into()));
        }
        let (b, a) = (leaves[leaves.len() - 2], leaves[leaves.len() - 1]);
        Ok(SimplifiedTree { tree, b, a })
    }

    pub fn dump(&self) -> String {
        self.tree.dump()
    }

    /// The conservation value each interior node contributes.
    pub fn h(&self, n: usize) -> i32 {
        let t = &self.tree;
        let Label::Production(p) = &t.nodes[n].label else { return -1 };
        let entire = p.body.len() as i32 + 1;
        if t.is_ancestor(n, self.a) {
            let child = t.nodes[n].children.iter().position(|&c| c == self.a || t.is_ancestor(c, self.a));
            return child.map_or(-1, |i| i as i32 + 1);
        }
        if t.is_ancestor(n, self.b) {
            return entire;
        }
        if self.b < n && n < self.a {
            return entire;
        }
        -1
    }

    /// Interior nodes with their H values.
    pub fn h_values(&self) -> Vec<(usize, i32)> {
        (0..self.tree.len())
            .filter(|&n| matches!(self.tree.nodes[n].label, Label::Production(_)))
            .map(|n| (n, self.h(n)))
            .collect()
    }

    /// Ancestors of B split into the segments between nodes that parent a
    /// prefix leaf or the lowest common ancestor of B and a. Nearest-root first.
    pub fn prefix_segments(&self) -> Vec<Vec<usize>> {
        let t = &self.tree;
        let mut path = t.ancestors(self.b);
        path.reverse();
        let lca = path.iter().rev().copied().find(|&n| t.is_ancestor(n, self.a));
        let mut segments = vec![Vec::new()];
        for &n in &path {
            let parents_leaf =
                t.nodes[n].children.iter().any(|&c| c < self.b && matches!(t.nodes[c].label, Label::Leaf(_)))
                    || t.nodes[n].children.contains(&self.b);
            if parents_leaf || Some(n) == lca {
                segments.push(Vec::new());
            } else {
                segments.last_mut().unwrap().push(n);
            }
        }
        segments
    }

    /// Ancestors of a that are not ancestors of B, nearest-root first.
    pub fn lookahead_path(&self) -> Vec<usize> {
        let t = &self.tree;
        let mut path: Vec<usize> = t.ancestors(self.a).into_iter().filter(|&n| !t.is_ancestor(n, self.b)).collect();
        path.reverse();
        path
    }

    fn label_of(&self, n: usize) -> &Label {
        &self.tree.nodes[n].label
    }

    fn repeats_at_most(&self, nodes: &[usize], k: usize) -> bool {
        let mut counts: HashMap<&Label, usize> = HashMap::new();
        nodes.iter().all(|&n| {
            let c = counts.entry(self.label_of(n)).or_default();
            *c += 1;
            *c <= k
        })
    }

    pub fn is_proper_above_b(&self) -> bool {
        self.prefix_segments().iter().all(|s| self.repeats_at_most(s, 2))
    }

    pub fn is_proper_above_a(&self) -> bool {
        self.repeats_at_most(&self.lookahead_path(), 2)
    }

    /// Replaces the subtree at `old` by the subtree at `new` (a descendant).
    fn splice(&self, old: usize, new: usize) -> SimplifiedTree {
        fn rebuild(
            t: &Tree,
            n: usize,
            old: usize,
            new: usize,
            marks: &[usize],
            out: &mut Vec<usize>,
            next: &mut usize,
        ) -> Shape {
            let n = if n == old { new } else { n };
            let id = *next;
            *next += 1;
            for (i, &m) in marks.iter().enumerate() {
                if m == n {
                    out[i] = id;
                }
            }
            match &t.nodes[n].label {
                Label::Production(p) => Shape::Node(
                    p.clone(),
                    t.nodes[n].children.iter().map(|&c| Rc::new(rebuild(t, c, old, new, marks, out, next))).collect(),
                ),
                Label::Leaf(s) => Shape::Leaf(s.clone()),
                Label::Epsilon => Shape::Epsilon,
            }
        }
        let marks = [self.b, self.a];
        let mut out = vec![usize::MAX; 2];
        let mut next = 0;
        let shape = rebuild(&self.tree, 0, old, new, &marks, &mut out, &mut next);
        SimplifiedTree { tree: Tree::from_shape(&shape), b: out[0], a: out[1] }
    }
}

/// A tree-projection decision: given the least repetitive triple, 0 splices
/// the second node over the first, 1 splices the third over the second.
pub type Decision<'a> = dyn Fn(&SimplifiedTree, usize, usize, usize) -> u8 + 'a;

/// ρ0: always splice the second node over the first.
pub fn rho_zero(_: &SimplifiedTree, _: usize, _: usize, _: usize) -> u8 {
    0
}

/// ρ_{π,n}: keeps a node labeled π with H value n that sits strictly between
/// the first two triple members by splicing the lower pair instead.
pub fn rho_keep(pi: Production, n: i32) -> impl Fn(&SimplifiedTree, usize, usize, usize) -> u8 {
    move |t, c1, c2, _c3| {
        let guarded = t
            .tree
            .ancestors(c2)
            .into_iter()
            .any(|m| c1 < m && m < c2 && t.label_of(m) == &Label::Production(pi.clone()) && t.h(m) == n);
        u8::from(guarded)
    }
}

fn least_triple(t: &SimplifiedTree, nodes: &[usize]) -> Option<(usize, usize, usize)> {
    // `nodes` are on one root-to-leaf path, ordered top-down.
    for (i, &n1) in nodes.iter().enumerate() {
        let same: Vec<usize> = nodes[i + 1..].iter().copied().filter(|&m| t.label_of(m) == t.label_of(n1)).collect();
        if same.len() >= 2 {
            return Some((n1, same[0], same[1]));
        }
    }
    None
}

fn surgery(t: &SimplifiedTree, (c1, c2, c3): (usize, usize, usize), rho: &Decision<'_>) -> SimplifiedTree {
    if rho(t, c1, c2, c3) == 0 {
        t.splice(c1, c2)
    } else {
        t.splice(c2, c3)
    }
}

/// Applies Φ to its limit and then Λ to its limit under `rho`.
pub fn project(t: &SimplifiedTree, rho: &Decision<'_>) -> SimplifiedTree {
    let mut cur = t.clone();
    loop {
        let triple = cur.prefix_segments().iter().find_map(|s| least_triple(&cur, s));
        match triple {
            Some(tr) => cur = surgery(&cur, tr, rho),
            None => break,
        }
    }
    while let Some(tr) = least_triple(&cur, &cur.lookahead_path()) {
        cur = surgery(&cur, tr, rho);
    }
    cur
}

/// Projects a simplified tree onto a proper one using ρ0.
pub fn make_proper(t: &SimplifiedTree) -> SimplifiedTree {
    project(t, &rho_zero)
}

/// The unique parse tree of `sentence`, rooted at the start symbol's production.
pub fn derive_parse_tree(g: &Grammar, sentence: &[Symbol]) -> Result<ParseTree, OracleError> {
    let t = build_tables(g).map_err(|_| OracleError::NotLr1)?;
    let ix = t.index();
    let mut input: Vec<usize> = Vec::new();
    for s in sentence {
        match ix.index_of(s) {
            Some(i) if ix.is_terminal(i) && i != ix.end() => input.push(i),
            _ => return Err(OracleError::UnknownSymbol(s.name().to_string())),
        }
    }
    input.push(ix.end());
    let mut states = vec![0usize];
    let mut shapes: Vec<Rc<Shape>> = Vec::new();
    let mut pos = 0;
    loop {
        let s = *states.last().unwrap();
        match t.action_at(s, input[pos]) {
            Action::Shift(m) => {
                shapes.push(Rc::new(Shape::Leaf(ix.symbol(input[pos]).clone())));
                states.push(m);
                pos += 1;
            }
            Action::Reduce(p) => {
                let n = ix.body(p).len();
                let kids = if n == 0 { vec![Rc::new(Shape::Epsilon)] } else { shapes.split_off(shapes.len() - n) };
                states.truncate(states.len() - n);
                shapes.push(Rc::new(Shape::Node(ix.production(p).clone(), kids)));
                let top = *states.last().unwrap();
                states.push(t.goto_at(top, ix.head(p)).expect("goto after reduce"));
            }
            Action::Accept => return Ok(Tree::from_shape(&shapes.pop().expect("accepted tree"))),
            Action::Error => return Err(OracleError::NotInLanguage { position: pos }),
        }
    }
}

/// Cuts a full parse tree down to the configuration whose B is the interior
/// node `b_index` (a preorder index into `t`) and whose lookahead is the next
/// terminal after B's subtree, or `$end`. `prefix_len` must equal |βB|.
pub fn simplify(g: &Grammar, t: &ParseTree, prefix_len: usize, b_index: usize) -> Result<SimplifiedTree, OracleError> {
    if b_index >= t.len() || !matches!(t.nodes[b_index].label, Label::Production(_)) {
        return Err(OracleError::BoundaryMismatch(format!("node {b_index} is not an interior node")));
    }
    let wrapped = Tree::from_shape(&Shape::Node(
        root_production(g),
        vec![Rc::new(t.shape(0)), Rc::new(Shape::Leaf(Symbol::end()))],
    ));
    let b = b_index + 1;
    let after = wrapped.subtree_end(b);
    let a = (after..wrapped.len())
        .find(|&n| matches!(&wrapped.nodes[n].label, Label::Leaf(s) if s.is_terminal()))
        .expect("end marker leaf");
    let path_b: HashSet<usize> = wrapped.ancestors(b).into_iter().collect();
    let path_a: HashSet<usize> = wrapped.ancestors(a).into_iter().collect();
    let keep = |n: usize| -> bool {
        if n == a || n == b || path_a.contains(&n) || path_b.contains(&n) {
            return true;
        }
        let parent = wrapped.nodes[n].parent;
        if n < b {
            return parent.is_some_and(|p| path_b.contains(&p));
        }
        n > b && n < a && !wrapped.is_ancestor(b, n)
    };
    fn cut(t: &Tree, n: usize, b: usize, keep: &dyn Fn(usize) -> bool) -> Shape {
        let node = &t.nodes[n];
        match &node.label {
            Label::Production(p) => {
                if n == b || (n < b && !t.is_ancestor(n, b)) {
                    return Shape::Leaf(p.head.clone());
                }
                let kids = node.children.iter().filter(|&&c| keep(c)).map(|&c| Rc::new(cut(t, c, b, keep))).collect();
                Shape::Node(p.clone(), kids)
            }
            Label::Leaf(s) => Shape::Leaf(s.clone()),
            Label::Epsilon => Shape::Epsilon,
        }
    }
    let tree = Tree::from_shape(&cut(&wrapped, 0, b, &keep));
    let st = SimplifiedTree::from_tree(tree)?;
    let got = st.tree.leaves().len() - 1;
    if got != prefix_len {
        return Err(OracleError::BoundaryMismatch(format!("prefix has {got} symbols, expected {prefix_len}")));
    }
    Ok(st)
}

/// Per-grammar facts the enumeration needs, computed from the productions alone.
struct Analysis {
    by_head: HashMap<Symbol, Vec<Production>>,
    nullable: HashSet<Symbol>,
    productive: HashSet<Symbol>,
    first: HashMap<Symbol, BTreeSet<Symbol>>,
    left_corners: HashMap<Symbol, BTreeSet<Symbol>>,
    epsilon: HashMap<Symbol, Rc<Shape>>,
    epsilon_height: usize,
}

impl Analysis {
    fn new(g: &Grammar) -> Self {
        let prods: Vec<Production> =
            std::iter::once(root_production(g)).chain(g.productions().iter().cloned()).collect();
        let mut by_head: HashMap<Symbol, Vec<Production>> = HashMap::new();
        for p in &prods {
            by_head.entry(p.head.clone()).or_default().push(p.clone());
        }
        let mut nullable: HashSet<Symbol> = HashSet::new();
        let mut productive: HashSet<Symbol> = g.terminals().iter().cloned().collect();
        loop {
            let before = (nullable.len(), productive.len());
            for p in &prods {
                if p.body.iter().all(|s| nullable.contains(s)) {
                    nullable.insert(p.head.clone());
                }
                if p.body.iter().all(|s| productive.contains(s)) {
                    productive.insert(p.head.clone());
                }
            }
            if before == (nullable.len(), productive.len()) {
                break;
            }
        }
        let mut first: HashMap<Symbol, BTreeSet<Symbol>> = HashMap::new();
        for t in g.terminals() {
            first.insert(t.clone(), BTreeSet::from([t.clone()]));
        }
        let mut left_corners: HashMap<Symbol, BTreeSet<Symbol>> = HashMap::new();
        let mut changed = true;
        while changed {
            changed = false;
            for p in &prods {
                let mut acc = BTreeSet::new();
                for s in &p.body {
                    acc.extend(first.get(s).cloned().unwrap_or_default());
                    if !nullable.contains(s) {
                        break;
                    }
                }
                let e = first.entry(p.head.clone()).or_default();
                let n = e.len();
                e.extend(acc);
                changed |= e.len() != n;
                if let Some(x) = p.body.first() {
                    let mut lc = left_corners.get(x).cloned().unwrap_or_default();
                    lc.insert(x.clone());
                    let e = left_corners.entry(p.head.clone()).or_default();
                    let n = e.len();
                    e.extend(lc);
                    changed |= e.len() != n;
                }
            }
        }
        // Shortest ε-derivation per nullable symbol, ties broken by production order.
        let mut height: HashMap<Symbol, (usize, Production)> = HashMap::new();
        loop {
            let mut changed = false;
            for p in &prods {
                if !p.body.iter().all(|s| nullable.contains(s)) {
                    continue;
                }
                let hs: Option<Vec<usize>> = p.body.iter().map(|s| height.get(s).map(|h| h.0)).collect();
                let Some(hs) = hs else { continue };
                let h = 1 + hs.into_iter().max().unwrap_or(0);
                if height.get(&p.head).is_none_or(|(old, _)| h < *old) {
                    height.insert(p.head.clone(), (h, p.clone()));
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        let mut epsilon: HashMap<Symbol, Rc<Shape>> = HashMap::new();
        fn build(
            x: &Symbol,
            height: &HashMap<Symbol, (usize, Production)>,
            memo: &mut HashMap<Symbol, Rc<Shape>>,
        ) -> Rc<Shape> {
            if let Some(s) = memo.get(x) {
                return s.clone();
            }
            let p = &height[x].1;
            let kids = if p.body.is_empty() {
                vec![Rc::new(Shape::Epsilon)]
            } else {
                p.body.iter().map(|y| build(y, height, memo)).collect()
            };
            let s = Rc::new(Shape::Node(p.clone(), kids));
            memo.insert(x.clone(), s.clone());
            s
        }
        for x in height.keys() {
            build(x, &height, &mut epsilon);
        }
        let epsilon_height = height.values().map(|h| h.0 + 1).max().unwrap_or(0);
        Analysis { by_head, nullable, productive, first, left_corners, epsilon, epsilon_height }
    }

    fn productions(&self, x: &Symbol) -> &[Production] {
        self.by_head.get(x).map_or(&[], |v| v.as_slice())
    }

    fn derives_first(&self, x: &Symbol, a: &Symbol) -> bool {
        x == a || (x.is_nonterminal() && self.first.get(x).is_some_and(|f| f.contains(a)))
    }

    fn all_productive(&self, xs: &[Symbol]) -> bool {
        xs.iter().all(|x| self.productive.contains(x))
    }

    fn all_nullable(&self, xs: &[Symbol]) -> bool {
        xs.iter().all(|x| self.nullable.contains(x))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Mode {
    Above,
    Below,
}

/// How subtree sets are represented while they are being built.
trait Algebra {
    type V: Clone;
    fn none(&self) -> Self::V;
    fn is_none(&self, v: &Self::V) -> bool;
    fn leaf(&self, s: &Symbol) -> Self::V;
    fn epsilon(&self, shape: &Rc<Shape>) -> Self::V;
    /// Adds the alternatives of `v` to `acc`.
    fn union(&self, acc: &mut Self::V, v: &Self::V);
    /// Nodes labeled `p` with one child drawn from each part; `h` is their H value.
    fn node(&self, p: &Production, h: i32, parts: &[Self::V]) -> Self::V;
}

type Variants = Rc<Vec<Rc<Shape>>>;

/// Materializes every tree, up to a limit.
struct Shapes {
    limit: usize,
    overflow: Cell<bool>,
}

impl Algebra for Shapes {
    type V = Variants;

    fn none(&self) -> Variants {
        Rc::new(Vec::new())
    }

    fn is_none(&self, v: &Variants) -> bool {
        v.is_empty()
    }

    fn leaf(&self, s: &Symbol) -> Variants {
        Rc::new(vec![Rc::new(Shape::Leaf(s.clone()))])
    }

    fn epsilon(&self, shape: &Rc<Shape>) -> Variants {
        Rc::new(vec![shape.clone()])
    }

    fn union(&self, acc: &mut Variants, v: &Variants) {
        if acc.len() + v.len() > self.limit {
            self.overflow.set(true);
            return;
        }
        Rc::make_mut(acc).extend(v.iter().cloned());
    }

    fn node(&self, p: &Production, _: i32, parts: &[Variants]) -> Variants {
        let size = parts.iter().try_fold(1usize, |n, v| n.checked_mul(v.len()));
        if size.is_none_or(|n| n > self.limit) {
            self.overflow.set(true);
            return self.none();
        }
        let mut rows: Vec<Vec<Rc<Shape>>> = vec![Vec::new()];
        for part in parts {
            rows = rows
                .iter()
                .flat_map(|row| {
                    part.iter().map(move |v| {
                        let mut r = row.clone();
                        r.push(v.clone());
                        r
                    })
                })
                .collect();
        }
        Rc::new(rows.into_iter().map(|r| Rc::new(Shape::Node(p.clone(), r))).collect())
    }
}

/// What the conservation map and the finiteness check need from a tree set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TreeSummary {
    /// Number of trees, saturating.
    pub count: u128,
    /// Largest tree height (levels, leaves included).
    pub max_height: usize,
    /// Largest H value of any node, per production.
    pub values: BTreeMap<Production, i32>,
}

impl TreeSummary {
    fn raise(&mut self, p: &Production, h: i32) {
        let e = self.values.entry(p.clone()).or_insert(h);
        *e = (*e).max(h);
    }
}

/// Summarizes tree sets without building them.
struct Summaries;

fn shape_summary(s: &Shape, out: &mut TreeSummary) -> usize {
    match s {
        Shape::Node(p, kids) => {
            out.raise(p, p.body.len() as i32 + 1);
            1 + kids.iter().map(|k| shape_summary(k, out)).max().unwrap_or(0)
        }
        _ => 1,
    }
}

impl Algebra for Summaries {
    type V = Rc<TreeSummary>;

    fn none(&self) -> Self::V {
        Rc::new(TreeSummary::default())
    }

    fn is_none(&self, v: &Self::V) -> bool {
        v.count == 0
    }

    fn leaf(&self, _: &Symbol) -> Self::V {
        Rc::new(TreeSummary { count: 1, max_height: 1, values: BTreeMap::new() })
    }

    fn epsilon(&self, shape: &Rc<Shape>) -> Self::V {
        let mut s = TreeSummary { count: 1, ..TreeSummary::default() };
        s.max_height = shape_summary(shape, &mut s);
        Rc::new(s)
    }

    fn union(&self, acc: &mut Self::V, v: &Self::V) {
        if v.count == 0 {
            return;
        }
        if acc.count == 0 {
            *acc = v.clone();
            return;
        }
        let a = Rc::make_mut(acc);
        a.count = a.count.saturating_add(v.count);
        a.max_height = a.max_height.max(v.max_height);
        for (p, &h) in &v.values {
            a.raise(p, h);
        }
    }

    fn node(&self, p: &Production, h: i32, parts: &[Self::V]) -> Self::V {
        if parts.iter().any(|v| v.count == 0) {
            return self.none();
        }
        let mut s = TreeSummary { count: 1, ..TreeSummary::default() };
        for v in parts {
            s.count = s.count.saturating_mul(v.count);
            s.max_height = s.max_height.max(v.max_height);
            for (q, &x) in &v.values {
                s.raise(q, x);
            }
        }
        s.max_height += 1;
        s.raise(p, h);
        Rc::new(s)
    }
}

/// Label repeat counts within the current segment.
type Repeats = Vec<(Production, usize)>;

struct Enumerator<'a, A: Algebra> {
    alg: A,
    an: &'a Analysis,
    prefix: &'a [Symbol],
    a: &'a Symbol,
    max_repeats: usize,
    memo: HashMap<(Production, usize, Mode, Repeats), A::V>,
    apath_memo: HashMap<(Symbol, Repeats), A::V>,
}

fn bump(counts: &[(Production, usize)], p: &Production) -> (Repeats, usize) {
    let mut out = counts.to_vec();
    match out.iter_mut().find(|(q, _)| q == p) {
        Some(e) => {
            e.1 += 1;
            let n = e.1;
            (out, n)
        }
        None => {
            out.push((p.clone(), 1));
            out.sort();
            (out, 1)
        }
    }
}

impl<'a, A: Algebra> Enumerator<'a, A> {
    fn eps(&self, xs: &[Symbol]) -> Vec<A::V> {
        xs.iter().map(|x| self.alg.epsilon(&self.an.epsilon[x])).collect()
    }

    /// Subtrees rooted at a node labeled `pi` whose leaves start at prefix
    /// position `q` and run through B; above the join point of B and a when
    /// `mode` is `Above`, below it otherwise.
    fn node(&mut self, pi: &Production, q: usize, mode: Mode, runs: &[(Production, usize)]) -> A::V {
        let key = (pi.clone(), q, mode, runs.to_vec());
        if let Some(v) = self.memo.get(&key) {
            return v.clone();
        }
        let mut out = self.alg.none();
        let p = self.prefix.len();
        let body = &pi.body;
        let entire = body.len() as i32 + 1;
        for c in 1..=body.len() {
            let r = q + c - 1;
            if r >= p || (c >= 2 && body[c - 2] != self.prefix[r - 1]) {
                break;
            }
            let y = &body[c - 1];
            let left: Vec<A::V> = self.prefix[q..r].iter().map(|s| self.alg.leaf(s)).collect();
            let rest = &body[c..];
            // Per role: whether the node joins B and a, its H value, the
            // mode of the spine child and the trailing children.
            let mut roles: Vec<(bool, i32, Mode, Vec<A::V>)> = Vec::new();
            match mode {
                Mode::Below => {
                    if self.an.all_nullable(rest) {
                        roles.push((false, entire, Mode::Below, self.eps(rest)));
                    }
                }
                Mode::Above => {
                    for d in c + 1..=body.len() {
                        let z = &body[d - 1];
                        if self.an.derives_first(z, self.a) && self.an.all_productive(&body[d..]) {
                            let mut parts = self.eps(&body[c..d - 1]);
                            let tail = if z == self.a { self.alg.leaf(z) } else { self.apath(z, &[]) };
                            if !self.alg.is_none(&tail) {
                                parts.push(tail);
                                roles.push((true, d as i32, Mode::Below, parts));
                            }
                        }
                        if !self.an.nullable.contains(z) {
                            break;
                        }
                    }
                    if self.an.all_productive(rest) {
                        roles.push((false, c as i32, Mode::Above, Vec::new()));
                    }
                }
            }
            for (is_lca, h, child_mode, trailing) in roles {
                let mut children = self.alg.none();
                if r == p - 1 && *y == self.prefix[p - 1] && child_mode == Mode::Below {
                    self.alg.union(&mut children, &self.alg.leaf(y));
                }
                let reachable =
                    y.is_nonterminal() && self.an.left_corners.get(y).is_some_and(|lc| lc.contains(&self.prefix[r]));
                if reachable {
                    let joint = c > 1 || is_lca;
                    let child_runs = if joint {
                        Some(Vec::new())
                    } else {
                        let (next, n) = bump(runs, pi);
                        (n <= self.max_repeats).then_some(next)
                    };
                    if let Some(child_runs) = child_runs {
                        for rho in self.an.productions(y).to_vec() {
                            let v = self.node(&rho, r, child_mode, &child_runs);
                            self.alg.union(&mut children, &v);
                        }
                    }
                }
                if self.alg.is_none(&children) {
                    continue;
                }
                let mut parts = left.clone();
                parts.push(children);
                parts.extend(trailing);
                let v = self.alg.node(pi, h, &parts);
                self.alg.union(&mut out, &v);
            }
        }
        self.memo.insert(key, out.clone());
        out
    }

    /// Subtrees rooted at `y` whose first leaf is the lookahead, preceded only by ε-subtrees.
    fn apath(&mut self, y: &Symbol, counts: &[(Production, usize)]) -> A::V {
        let key = (y.clone(), counts.to_vec());
        if let Some(v) = self.apath_memo.get(&key) {
            return v.clone();
        }
        let mut out = self.alg.none();
        for rho in self.an.productions(y).to_vec() {
            let (next, n) = bump(counts, &rho);
            if n > self.max_repeats {
                continue;
            }
            for d in 1..=rho.body.len() {
                let z = &rho.body[d - 1];
                if self.an.derives_first(z, self.a) && self.an.all_productive(&rho.body[d..]) {
                    let tail = if z == self.a { self.alg.leaf(z) } else { self.apath(z, &next) };
                    if !self.alg.is_none(&tail) {
                        let mut parts = self.eps(&rho.body[..d - 1]);
                        parts.push(tail);
                        let v = self.alg.node(&rho, d as i32, &parts);
                        self.alg.union(&mut out, &v);
                    }
                }
                if !self.an.nullable.contains(z) {
                    break;
                }
            }
        }
        self.apath_memo.insert(key, out.clone());
        out
    }
}

/// Options for tree enumeration.
#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    /// Largest number of equally labeled nodes allowed in one ancestor segment
    /// or on the lookahead path. 2 gives exactly the proper trees.
    pub max_repeats: usize,
    /// Fail with `TooManyTrees` beyond this many trees.
    pub limit: usize,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions { max_repeats: 2, limit: 200_000 }
    }
}

fn check_config(g: &Grammar, prefix: &[Symbol], lookahead: &Symbol) -> Result<(), OracleError> {
    for s in prefix.iter().chain([lookahead]) {
        if g.symbol(s.name()).as_ref() != Some(s) {
            return Err(OracleError::UnknownSymbol(s.name().to_string()));
        }
    }
    if !lookahead.is_terminal() {
        return Err(OracleError::UnknownSymbol(lookahead.name().to_string()));
    }
    if !prefix.last().is_some_and(|b| b.is_nonterminal()) {
        return Err(OracleError::PrefixNotAtNonterminal);
    }
    let t = build_tables(g).map_err(|_| OracleError::NotLr1)?;
    restack(&t, prefix).map_err(|e| match e {
        crate::lr1::Lr1Error::NotAViablePrefix { position } => OracleError::NotAViablePrefix { position },
        _ => OracleError::NotLr1,
    })?;
    Ok(())
}

/// All proper simplified trees with yield `prefix · lookahead`.
pub fn enumerate_proper_trees(
    g: &Grammar,
    prefix: &[Symbol],
    lookahead: &Symbol,
) -> Result<Vec<SimplifiedTree>, OracleError> {
    enumerate_trees(g, prefix, lookahead, EnumOptions::default())
}

pub fn enumerate_trees(
    g: &Grammar,
    prefix: &[Symbol],
    lookahead: &Symbol,
    opts: EnumOptions,
) -> Result<Vec<SimplifiedTree>, OracleError> {
    check_config(g, prefix, lookahead)?;
    let shapes = shapes(g, prefix, lookahead, opts)?;
    Ok(shapes
        .iter()
        .map(|s| SimplifiedTree::from_tree(Tree::from_shape(s)).expect("enumerated tree has B and a"))
        .collect())
}

fn run<A: Algebra>(alg: A, g: &Grammar, prefix: &[Symbol], lookahead: &Symbol, max_repeats: usize) -> (A, A::V) {
    let an = Analysis::new(g);
    let mut en = Enumerator {
        alg,
        an: &an,
        prefix,
        a: lookahead,
        max_repeats,
        memo: HashMap::new(),
        apath_memo: HashMap::new(),
    };
    let v = en.node(&root_production(g), 0, Mode::Above, &[]);
    (en.alg, v)
}

fn shapes(g: &Grammar, prefix: &[Symbol], lookahead: &Symbol, opts: EnumOptions) -> Result<Variants, OracleError> {
    let alg = Shapes { limit: opts.limit, overflow: Cell::new(false) };
    let (alg, v) = run(alg, g, prefix, lookahead, opts.max_repeats);
    if alg.overflow.get() {
        return Err(OracleError::TooManyTrees(opts.limit));
    }
    Ok(v)
}

/// Tree count, maximal height and per-production maximal H value over the
/// trees `enumerate_trees` would produce, computed without building them.
/// The root's values are reported under the augmented production.
pub fn summarize_trees(
    g: &Grammar,
    prefix: &[Symbol],
    lookahead: &Symbol,
    max_repeats: usize,
) -> Result<TreeSummary, OracleError> {
    check_config(g, prefix, lookahead)?;
    let (_, v) = run(Summaries, g, prefix, lookahead, max_repeats);
    let mut s = (*v).clone();
    if let Some(h) = s.values.remove(&root_production(g)) {
        s.raise(&g.augmented_production(), h);
    }
    Ok(s)
}

/// Folds a summary into a conservation map.
pub fn conservation_from_summary(g: &Grammar, s: &TreeSummary) -> ConservationMap {
    let prods: Vec<Production> =
        std::iter::once(g.augmented_production()).chain(g.productions().iter().cloned()).collect();
    let mut m = ConservationMap::free(&prods);
    for (p, &v) in &s.values {
        m.raise(p, v);
    }
    m
}

/// An upper bound on the height of any proper simplified tree for a prefix of
/// `prefix_len` symbols: each of the prefix-parent and join nodes is followed
/// by at most two nodes per production on the path to B, the lookahead path
/// holds at most two per production, and an ε-subtree adds its own height.
pub fn height_bound(g: &Grammar, prefix_len: usize) -> usize {
    let an = Analysis::new(g);
    let np = g.productions().len() + 1;
    let joints = prefix_len + 1;
    (joints + 1) * (2 * np + 1) + 2 * np + an.epsilon_height + 2
}

/// The conservation map read off the proper simplified trees: for each
/// production, the largest H value of any node it labels, else −1.
pub fn oracle_conservation(g: &Grammar, prefix: &[Symbol], lookahead: &Symbol) -> Result<ConservationMap, OracleError> {
    let s = summarize_trees(g, prefix, lookahead, 2)?;
    Ok(conservation_from_summary(g, &s))
}

/// Folds H values of a tree set into a conservation map.
pub fn conservation_from_trees(g: &Grammar, trees: &[SimplifiedTree]) -> ConservationMap {
    let aug = g.augmented_production();
    let root = root_production(g);
    let prods: Vec<Production> = std::iter::once(aug.clone()).chain(g.productions().iter().cloned()).collect();
    let mut best: BTreeMap<Production, i32> = BTreeMap::new();
    for t in trees {
        for (n, h) in t.h_values() {
            let Label::Production(p) = &t.tree.nodes[n].label else { continue };
            let p = if *p == root { aug.clone() } else { p.clone() };
            let e = best.entry(p).or_insert(-1);
            *e = (*e).max(h);
        }
    }
    let mut m = ConservationMap::free(&prods);
    for (p, v) in best {
        m.raise(&p, v);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar_text;

    fn syms(g: &Grammar, s: &str) -> Vec<Symbol> {
        g.symbol_string(s).unwrap()
    }

    #[test]
    fn anbn_tree() {
        let g = parse_grammar_text("%terminals a b\nS -> a S b | ;").unwrap();
        let t = derive_parse_tree(&g, &syms(&g, "a a b b")).unwrap();
        let want = "\
S -> a S b
  a
  S -> a S b
    a
    S -> ε
      ε
    b
  b
";
        assert_eq!(t.dump(), want);
        assert!(t.is_parse_complete());
        assert!(matches!(derive_parse_tree(&g, &syms(&g, "a b b")), Err(OracleError::NotInLanguage { .. })));
    }

    #[test]
    fn naive_b_end_trees() {
        let g = parse_grammar_text("%terminals c d\nS -> A | B ;\nA -> C ;\nB -> D ;\nC -> c ;\nD -> d ;").unwrap();
        let trees = enumerate_proper_trees(&g, &syms(&g, "B"), &Symbol::end()).unwrap();
        assert_eq!(trees.len(), 1);
        assert_eq!(trees[0].dump(), "$accept -> S $end\n  S -> B\n    B\n  $end\n");
        let m = oracle_conservation(&g, &syms(&g, "B"), &Symbol::end()).unwrap();
        let p = |s: &str| {
            let (h, b) = s.split_once("->").unwrap();
            Production::new(Symbol::nonterminal(h.trim()), syms(&g, b))
        };
        assert_eq!(m.get(&g.augmented_production()), Some(2));
        assert_eq!(m.get(&p("S -> B")), Some(2));
        assert_eq!(m.get(&p("B -> D")), Some(-1));
        assert_eq!(m.get(&p("A -> C")), Some(-1));
        assert!(enumerate_proper_trees(&g, &syms(&g, "B"), &Symbol::terminal("c")).unwrap().is_empty());
        assert!(matches!(
            enumerate_proper_trees(&g, &syms(&g, "A B"), &Symbol::end()),
            Err(OracleError::NotAViablePrefix { position: 1 })
        ));
    }

    #[test]
    fn splice_keeps_boundaries() {
        let g = parse_grammar_text("%terminals a b\nS -> S a | b ;").unwrap();
        let t = derive_parse_tree(&g, &syms(&g, "b a a a a")).unwrap();
        // B is the innermost S -> b node.
        let b = (0..t.len())
            .rev()
            .find(|&n| t.node(n).label == Label::Production(Production::new(Symbol::nonterminal("S"), syms(&g, "b"))))
            .unwrap();
        let st = simplify(&g, &t, 1, b).unwrap();
        assert_eq!(st.tree.yield_symbols(), syms(&g, "S a"));
        let p = make_proper(&st);
        assert_eq!(p.tree.yield_symbols(), syms(&g, "S a"));
        assert!(p.is_proper_above_b() && p.is_proper_above_a());
        assert!(p.tree.len() < st.tree.len());
        assert_eq!(make_proper(&p), p);
    }
}
