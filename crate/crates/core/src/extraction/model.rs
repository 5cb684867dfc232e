use super::{BindingClass, ExtractionError, ExtractionParams};
use crate::coherence::CoherenceMatrix;
use crate::scalar::Scalar;
use crate::simplex::{solve, LinearProgram, LpError, Relation, SolverOptions};
use crate::topics::TopicModel;

/// Constraint family of each row, used for infeasibility diagnosis and
/// structural checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowClass {
    /// `mu + (1 - coh) x <= 1` for one edge.
    Bottleneck,
    SourceOutflow,
    SinkInflow,
    Conservation,
    Length,
    /// `c_t` bounded by the membership-weighted activation of topic t.
    CoverageLink,
    CoverageCount,
    /// Upper bound 1 on a single variable.
    Bound,
}

/// The flow program over one source/sink window.
///
/// Variables are laid out as edge flows (one per candidate pair, in
/// row-major chronological order), then one coverage indicator per topic,
/// then the bottleneck `mu`.
#[derive(Debug, Clone)]
pub struct LpModel<T: Scalar = f64> {
    pub program: LinearProgram<T>,
    pub classes: Vec<RowClass>,
    /// Window documents in chronological order; the first is the source and
    /// the last the sink.
    pub ids: Vec<String>,
    /// Candidate pairs as positions into `ids`.
    pub edges: Vec<(usize, usize)>,
    pub coherence: Vec<T>,
    pub topic_count: usize,
    pub required_topics: usize,
    pub params: ExtractionParams,
    pub warnings: Vec<String>,
}

impl<T: Scalar> LpModel<T> {
    pub fn variable_count(&self) -> usize {
        self.program.num_vars()
    }

    pub fn coverage_var(&self, topic: usize) -> usize {
        self.edges.len() + topic
    }

    pub fn bottleneck_var(&self) -> usize {
        self.edges.len() + self.topic_count
    }

    pub fn source(&self) -> &str {
        &self.ids[0]
    }

    pub fn sink(&self) -> &str {
        &self.ids[self.ids.len() - 1]
    }

    fn without(&self, drop: &[RowClass]) -> LinearProgram<T> {
        let mut lp = self.program.clone();
        lp.constraints = lp
            .constraints
            .into_iter()
            .zip(&self.classes)
            .filter(|(_, class)| !drop.contains(class))
            .map(|(c, _)| c)
            .collect();
        lp
    }
}

/// Builds the program for the window between `source` and `sink`.
pub fn build_lp<T: Scalar>(
    matrix: &CoherenceMatrix<T>,
    topics: &TopicModel<T>,
    source: &str,
    sink: &str,
    params: &ExtractionParams,
) -> Result<LpModel<T>, ExtractionError> {
    params.validate()?;
    let unknown = |id: &str| ExtractionError::UnknownDocument(id.to_string());
    let s = matrix.position(source).ok_or_else(|| unknown(source))?;
    let e = matrix.position(sink).ok_or_else(|| unknown(sink))?;
    if s >= e {
        return Err(ExtractionError::EndpointOrder {
            start: source.to_string(),
            end: sink.to_string(),
        });
    }

    let ids: Vec<String> = matrix.ids()[s..=e].to_vec();
    let n = ids.len();
    let mut memberships = Vec::with_capacity(n);
    for id in &ids {
        memberships.push(
            topics
                .membership
                .get(id)
                .ok_or_else(|| ExtractionError::MissingTopic(id.clone()))?,
        );
    }
    let topic_count = topics.topic_count;

    // no edges into the source or out of the sink
    let mut edges = Vec::new();
    let mut coherence = Vec::new();
    for i in 0..n - 1 {
        for j in i + 1..n {
            edges.push((i, j));
            coherence.push(matrix.score(s + i, s + j).expect("window pair is chronological"));
        }
    }
    let p = edges.len();
    let mu = p + topic_count;
    let mut lp = LinearProgram::new(p + topic_count + 1);
    let mut classes = Vec::new();

    lp.objective[mu] = T::one();
    let lambda = T::of(params.tie_break_lambda) / T::of_usize(p);
    for (k, &c) in coherence.iter().enumerate() {
        lp.objective[k] = lambda * c;
    }

    let one = T::one();
    for (k, &(i, j)) in edges.iter().enumerate() {
        let row = vec![(mu, one), (k, one - coherence[k])];
        // cuts on the endpoint edges seed the bottleneck; the rest are
        // activated only when violated
        if i == 0 || j == n - 1 {
            lp.add(row, Relation::Le, one);
        } else {
            lp.add_lazy(row, one);
        }
        classes.push(RowClass::Bottleneck);
    }

    let out_of = |node: usize| -> Vec<(usize, T)> {
        edges
            .iter()
            .enumerate()
            .filter(|(_, &(i, _))| i == node)
            .map(|(k, _)| (k, one))
            .collect()
    };
    let into = |node: usize| -> Vec<(usize, T)> {
        edges
            .iter()
            .enumerate()
            .filter(|(_, &(_, j))| j == node)
            .map(|(k, _)| (k, one))
            .collect()
    };

    lp.add(out_of(0), Relation::Eq, one);
    classes.push(RowClass::SourceOutflow);
    lp.add(into(n - 1), Relation::Eq, one);
    classes.push(RowClass::SinkInflow);
    for node in 1..n - 1 {
        let mut row = into(node);
        row.extend(out_of(node).into_iter().map(|(k, a)| (k, -a)));
        lp.add(row, Relation::Eq, T::zero());
        classes.push(RowClass::Conservation);
    }
    lp.add((0..p).map(|k| (k, one)).collect(), Relation::Eq, T::of_usize(params.k - 1));
    classes.push(RowClass::Length);

    // activation is inflow, except for the source whose activation is its
    // outflow; an edge out of the source therefore activates both ends
    for t in 0..topic_count {
        let mut row = vec![(p + t, one)];
        for (k, &(i, j)) in edges.iter().enumerate() {
            let mut w = memberships[j][t];
            if i == 0 {
                w += memberships[0][t];
            }
            if w != T::zero() {
                row.push((k, -w));
            }
        }
        lp.add(row, Relation::Le, T::zero());
        classes.push(RowClass::CoverageLink);
    }
    let required_topics = params.required_topics(topic_count);
    lp.add(
        (0..topic_count).map(|t| (p + t, one)).collect(),
        Relation::Ge,
        T::of_usize(required_topics),
    );
    classes.push(RowClass::CoverageCount);

    for t in 0..topic_count {
        lp.add(vec![(p + t, one)], Relation::Le, one);
        classes.push(RowClass::Bound);
    }
    lp.add(vec![(mu, one)], Relation::Le, one);
    classes.push(RowClass::Bound);
    // flow on a single-source DAG never exceeds the unit source outflow, so
    // these bounds stay inactive unless violated
    for k in 0..p {
        lp.add_lazy(vec![(k, one)], one);
        classes.push(RowClass::Bound);
    }

    let mut warnings = Vec::new();
    if params.k > n {
        warnings.push(format!(
            "expected length k={} exceeds the longest chronological path ({} events); the program is infeasible",
            params.k, n
        ));
    }

    Ok(LpModel {
        program: lp,
        classes,
        ids,
        edges,
        coherence,
        topic_count,
        required_topics,
        params: *params,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractionSolution<T: Scalar = f64> {
    /// Flow per candidate edge, aligned with `LpModel::edges`.
    pub flows: Vec<T>,
    pub coverage: Vec<T>,
    /// Optimal bottleneck value `mu*`.
    pub bottleneck: T,
    /// Full objective including the tie-break term.
    pub objective: T,
    pub iterations: usize,
}

impl<T: Scalar> ExtractionSolution<T> {
    /// Full variable vector in the model's layout.
    pub fn values(&self) -> Vec<T> {
        let mut v = self.flows.clone();
        v.extend_from_slice(&self.coverage);
        v.push(self.bottleneck);
        v
    }
}

/// Solves the program. On infeasibility the coverage rows are dropped first,
/// then the length row, to name the constraint family responsible.
pub fn solve_lp<T: Scalar>(model: &LpModel<T>) -> Result<ExtractionSolution<T>, ExtractionError> {
    let options = SolverOptions {
        tolerance: model.params.solver_tolerance,
        ..SolverOptions::default()
    };
    match solve(&model.program, options) {
        Ok(sol) => {
            let p = model.edges.len();
            let t = model.topic_count;
            Ok(ExtractionSolution {
                flows: sol.values[..p].to_vec(),
                coverage: sol.values[p..p + t].to_vec(),
                bottleneck: sol.values[p + t],
                objective: sol.objective,
                iterations: sol.iterations,
            })
        }
        Err(LpError::Infeasible) => {
            let feasible = |lp: LinearProgram<T>| solve(&lp, options).is_ok();
            let binding = if feasible(model.without(&[RowClass::CoverageCount])) {
                BindingClass::Coverage
            } else if feasible(model.without(&[RowClass::CoverageCount, RowClass::Length])) {
                BindingClass::Length
            } else {
                BindingClass::Structure
            };
            Err(ExtractionError::Infeasible { binding })
        }
        Err(other) => Err(ExtractionError::Solver(other)),
    }
}
