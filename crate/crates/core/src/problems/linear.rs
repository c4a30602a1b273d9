//! Linear Poisson problem `lap u = s(x)` sharing boundary data and
//! enrichment with another problem. Used for the Laplacian and Poisson
//! initial guesses and as a linear test case.

use super::Problem;
use crate::geometry::{Domain, Point};
use crate::kernels::DifferentialComponent;
use crate::error::Result;
use crate::system::enrichment::Enrichment;

const COMPONENTS: [DifferentialComponent; 1] = [DifferentialComponent::Laplacian];

type Field<'a> = Box<dyn Fn(&Point) -> f64 + Send + Sync + 'a>;

pub struct LinearPoisson<'a> {
    dim: usize,
    domain: Domain,
    source: Field<'a>,
    dirichlet: Field<'a>,
    neumann: Field<'a>,
    exact: Option<Field<'a>>,
    enrichment: Vec<Enrichment>,
}

impl<'a> LinearPoisson<'a> {
    pub fn new(
        dim: usize,
        domain: Domain,
        source: impl Fn(&Point) -> f64 + Send + Sync + 'a,
        dirichlet: impl Fn(&Point) -> f64 + Send + Sync + 'a,
    ) -> Self {
        LinearPoisson {
            dim,
            domain,
            source: Box::new(source),
            dirichlet: Box::new(dirichlet),
            neumann: Box::new(|_| 0.0),
            exact: None,
            enrichment: Vec::new(),
        }
    }

    pub fn with_exact(mut self, exact: impl Fn(&Point) -> f64 + Send + Sync + 'a) -> Self {
        self.exact = Some(Box::new(exact));
        self
    }

    pub fn with_enrichment(mut self, e: Vec<Enrichment>) -> Self {
        self.enrichment = e;
        self
    }

    /// Same boundary data as `prob`; source `prob.poisson_rhs` when
    /// `with_source`, zero (Laplace) otherwise.
    pub fn companion(prob: &'a dyn Problem, with_source: bool) -> Self {
        let source: Field<'a> = if with_source {
            Box::new(move |x| prob.poisson_rhs(x))
        } else {
            Box::new(|_| 0.0)
        };
        LinearPoisson {
            dim: prob.dim(),
            domain: prob.domain(),
            source,
            dirichlet: Box::new(move |x| prob.dirichlet(x)),
            neumann: Box::new(move |x| prob.neumann(x)),
            exact: None,
            enrichment: prob.enrichment(),
        }
    }
}

impl Problem for LinearPoisson<'_> {
    fn name(&self) -> String {
        "poisson".into()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> &[DifferentialComponent] {
        &COMPONENTS
    }

    fn residual(&self, x: &Point, v: &[f64]) -> f64 {
        v[0] - (self.source)(x)
    }

    fn d1(&self, _x: &Point, _v: &[f64], out: &mut [f64]) {
        out[0] = 1.0;
    }

    fn d2(&self, _x: &Point, _v: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }

    fn d2_pairs(&self) -> Vec<(usize, usize)> {
        Vec::new()
    }

    fn dirichlet(&self, x: &Point) -> f64 {
        (self.dirichlet)(x)
    }

    fn neumann(&self, x: &Point) -> f64 {
        (self.neumann)(x)
    }

    fn exact(&self, x: &Point) -> Option<f64> {
        self.exact.as_ref().map(|f| f(x))
    }

    fn domain(&self) -> Domain {
        self.domain
    }

    fn enrichment(&self) -> Vec<Enrichment> {
        self.enrichment.clone()
    }

    fn linearized(&self, _x: &Point, _v: &[f64], out: &mut [f64]) -> Result<()> {
        out[0] = 1.0;
        Ok(())
    }

    fn poisson_rhs(&self, x: &Point) -> f64 {
        (self.source)(x)
    }
}
