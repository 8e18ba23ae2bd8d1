//! Tree-node cost model with exact first and second derivatives.
//!
//! Each node cost splits into a safety part — the only part the risk
//! allocation reweights — and everything else:
//!
//! * safe: hinge penalties on the clearance to the drivable boundary, to
//!   key-vehicle footprints, and to reachable sets of unresolved agents;
//! * tracking: squared lateral offset to the policy reference line, an
//!   optional keep-inside hinge for a desired area, and squared speed error
//!   against the branch's rendered speed profile;
//! * kinematic: quadratic hinges on the state and control box bounds;
//! * comfort: squared acceleration, jerk, lateral acceleration, and steering
//!   rate.
//!
//! Clearance to a polygon is measured through three covering circles spaced
//! along the vehicle's long axis; the three signed clearances are fused with
//! a sharp smooth-min so every term stays differentiable. All gradients and
//! Hessians are analytic (finite differences only appear in tests): polygon
//! distance queries report the nearest boundary feature, whose second
//! derivative is zero for an edge and a known rank-one form for a vertex,
//! and the circle centers contribute one extra heading-curvature term.
//!
//! A branch node reads the obstacle set of its own branch at its step. A
//! trunk node pays the probability-weighted mix of every branch's context,
//! which is what couples the shared segment to all contingencies. Control
//! terms carry no context and are never part of the safe split.

use branchplan_core::dynamics::{
    Control, ControlVector, EgoState, StateMatrix, StateVector, VehicleParams,
};
use branchplan_core::geometry::{NearestFeature, Point2, Polygon, Polyline, SmoothAggregate};
use branchplan_core::scalar::{real, Real};
use nalgebra::{SMatrix, SVector};

use crate::tree::NodeRef;
use crate::SolverError;

pub type ControlMatrix<T> = SMatrix<T, 2, 2>;

/// Weights and shape parameters of the node cost.
#[derive(Debug, Clone)]
pub struct CostWeights<T> {
    /// Hinge weight for leaving the drivable area.
    pub drivable: T,
    /// Hinge weight for key-vehicle footprints.
    pub obstacle: T,
    /// Hinge weight for reachable sets of unresolved agents.
    pub reachable: T,
    /// Clearance (m) below which the safety hinges engage.
    pub safety_margin: T,
    /// Squared lateral offset to the reference line.
    pub reference: T,
    /// Keep-inside hinge for the desired area (0 disables).
    pub desired_area: T,
    /// Squared speed-tracking error.
    pub speed: T,
    /// Quadratic hinges on the state box bounds.
    pub kinematic_state: T,
    /// Quadratic hinges on the control box bounds.
    pub kinematic_control: T,
    pub accel: T,
    pub jerk: T,
    pub lateral_accel: T,
    pub steer_rate: T,
    /// Smooth-min sharpness for fusing circle clearances; negative.
    pub beta: T,
}

impl<T: Real> Default for CostWeights<T> {
    fn default() -> Self {
        Self {
            drivable: real(40.0),
            obstacle: real(40.0),
            reachable: real(25.0),
            safety_margin: real(0.5),
            reference: real(0.4),
            desired_area: real(2.0),
            speed: real(0.3),
            kinematic_state: real(50.0),
            kinematic_control: real(20.0),
            accel: real(0.08),
            jerk: real(0.03),
            lateral_accel: real(0.3),
            steer_rate: real(1.5),
            beta: real(-10.0),
        }
    }
}

/// Obstacles one branch sees at one planning step.
#[derive(Debug, Clone, Default)]
pub struct StepObstacles<T> {
    /// Inflated footprints of the branch's key vehicles.
    pub vehicles: Vec<Polygon<T>>,
    /// Reachable-set polygons of unresolved agents.
    pub reachable: Vec<Polygon<T>>,
}

/// Per-branch cost context: one obstacle set and one reference speed per
/// step, `0..=horizon`.
#[derive(Debug, Clone)]
pub struct BranchContext<T> {
    pub probability: T,
    pub steps: Vec<StepObstacles<T>>,
    pub speed_reference: Vec<T>,
}

/// Everything a node cost evaluation depends on besides the node itself.
#[derive(Debug, Clone)]
pub struct CostModel<T> {
    pub weights: CostWeights<T>,
    pub vehicle: VehicleParams<T>,
    /// Region the ego must stay inside.
    pub drivable: Polygon<T>,
    /// Reference line of the policy under evaluation.
    pub reference: Polyline<T>,
    /// Optional region the policy wants the ego to keep inside (e.g. the
    /// target lane strip); weighted by `weights.desired_area`.
    pub desired_area: Option<Polygon<T>>,
    pub branches: Vec<BranchContext<T>>,
}

/// Node cost split into the risk-reweighted part and the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostTerms<T> {
    pub safe: T,
    pub other: T,
}

impl<T: Real> CostTerms<T> {
    #[inline]
    pub fn total(&self) -> T {
        self.safe + self.other
    }
}

/// Quadratic expansion of a node cost about `(x, u)`.
///
/// State derivatives are kept separate for the safe part so the backward
/// pass can scale it by the branch's risk weight; control terms are never
/// safe, so they appear once. Costs are separable in state and control —
/// there is no cross block.
#[derive(Debug, Clone)]
pub struct CostExpansion<T: Real> {
    pub value: CostTerms<T>,
    pub safe_grad_x: StateVector<T>,
    pub safe_hess_x: StateMatrix<T>,
    pub other_grad_x: StateVector<T>,
    pub other_hess_x: StateMatrix<T>,
    pub grad_u: ControlVector<T>,
    pub hess_u: ControlMatrix<T>,
}

impl<T: Real> CostExpansion<T> {
    pub fn zero() -> Self {
        Self {
            value: CostTerms { safe: T::zero(), other: T::zero() },
            safe_grad_x: StateVector::zeros(),
            safe_hess_x: StateMatrix::zeros(),
            other_grad_x: StateVector::zeros(),
            other_hess_x: StateMatrix::zeros(),
            grad_u: ControlVector::zeros(),
            hess_u: ControlMatrix::zeros(),
        }
    }
}

/// Scalar function of the state with exact gradient and Hessian.
#[derive(Debug, Clone, Copy)]
struct Quad6<T: Real> {
    value: T,
    grad: StateVector<T>,
    hess: StateMatrix<T>,
}

impl<T: Real> Quad6<T> {
    fn zero() -> Self {
        Self { value: T::zero(), grad: StateVector::zeros(), hess: StateMatrix::zeros() }
    }

    fn add_scaled(&mut self, other: &Quad6<T>, scale: T) {
        self.value += scale * other.value;
        self.grad += other.grad * scale;
        self.hess += other.hess * scale;
    }
}

/// Signed clearance of one covering circle to one polygon, with derivatives
/// with respect to the pose coordinates (x, y, heading).
#[derive(Debug, Clone, Copy)]
struct Clearance<T: Real> {
    value: T,
    grad: SVector<T, 3>,
    hess: SMatrix<T, 3, 3>,
}

/// Node cost interface the optimizer consumes; [`CostModel`] is the real
/// implementation, tests substitute synthetic quadratics.
pub trait StageCost<T: Real> {
    /// Cost of a node at `at` with state `x` and incoming control `u`.
    fn evaluate(&self, at: NodeRef, x: &EgoState<T>, u: &Control<T>) -> CostTerms<T> {
        self.expand(at, x, u).value
    }

    /// Quadratic expansion of the node cost about `(x, u)`.
    fn expand(&self, at: NodeRef, x: &EgoState<T>, u: &Control<T>) -> CostExpansion<T>;
}

impl<T: Real> StageCost<T> for CostModel<T> {
    fn expand(&self, at: NodeRef, x: &EgoState<T>, u: &Control<T>) -> CostExpansion<T> {
        let mut out = CostExpansion::zero();
        match at {
            NodeRef::Branch { branch, step } => {
                let ctx = &self.branches[branch];
                let (safe, other) = self.state_quads(ctx, step, x);
                out.value.safe = safe.value;
                out.safe_grad_x = safe.grad;
                out.safe_hess_x = safe.hess;
                out.value.other = other.value;
                out.other_grad_x = other.grad;
                out.other_hess_x = other.hess;
            }
            NodeRef::Trunk { step } => {
                let mut safe_mix = Quad6::zero();
                let mut other_mix = Quad6::zero();
                for ctx in &self.branches {
                    let (safe, other) = self.state_quads(ctx, step, x);
                    safe_mix.add_scaled(&safe, ctx.probability);
                    other_mix.add_scaled(&other, ctx.probability);
                }
                out.value.safe = safe_mix.value;
                out.safe_grad_x = safe_mix.grad;
                out.safe_hess_x = safe_mix.hess;
                out.value.other = other_mix.value;
                out.other_grad_x = other_mix.grad;
                out.other_hess_x = other_mix.hess;
            }
        }
        let (cv, cg, ch) = self.control_quad(u);
        out.value.other += cv;
        out.grad_u = cg;
        out.hess_u = ch;
        out
    }
}

impl<T: Real> CostModel<T> {
    /// Checks internal shape invariants; returns the shared horizon.
    pub fn check(&self) -> Result<usize, SolverError> {
        if self.branches.is_empty() {
            return Err(SolverError::Empty("cost model needs at least one branch context"));
        }
        let steps = self.branches[0].steps.len();
        if steps == 0 {
            return Err(SolverError::Empty("branch context has no steps"));
        }
        let mut total = T::zero();
        for b in &self.branches {
            if b.steps.len() != steps || b.speed_reference.len() != steps {
                return Err(SolverError::Dimension(
                    "branch contexts must share one horizon across steps and speed references",
                ));
            }
            total += b.probability;
        }
        if (total - T::one()).abs() > real(1e-6) {
            return Err(SolverError::BadProbabilities {
                sum: branchplan_core::scalar::to_f64(total),
            });
        }
        Ok(steps - 1)
    }

    /// Safe and non-safe state-dependent costs of one branch context.
    fn state_quads(&self, ctx: &BranchContext<T>, step: usize, x: &EgoState<T>) -> (Quad6<T>, Quad6<T>) {
        let w = &self.weights;
        let obstacles = &ctx.steps[step];

        let mut safe = Quad6::zero();
        self.keep_inside(&self.drivable, x, w.drivable, w.safety_margin, &mut safe);
        for poly in &obstacles.vehicles {
            self.keep_away(poly, x, w.obstacle, w.safety_margin, &mut safe);
        }
        for poly in &obstacles.reachable {
            self.keep_away(poly, x, w.reachable, w.safety_margin, &mut safe);
        }

        let mut other = Quad6::zero();
        self.reference_tracking(x, &mut other);
        if let Some(area) = &self.desired_area {
            if w.desired_area > T::zero() {
                self.keep_inside(area, x, w.desired_area, T::zero(), &mut other);
            }
        }
        // Speed tracking against this context's rendered profile.
        let dv = x.speed - ctx.speed_reference[step];
        other.value += w.speed * dv * dv;
        other.grad[3] += real::<T>(2.0) * w.speed * dv;
        other.hess[(3, 3)] += real::<T>(2.0) * w.speed;
        self.state_bounds(x, &mut other);
        self.comfort_state(x, &mut other);
        (safe, other)
    }

    /// Hinge on the smooth-min clearance to a keep-out polygon.
    fn keep_away(&self, poly: &Polygon<T>, x: &EgoState<T>, weight: T, margin: T, acc: &mut Quad6<T>) {
        self.clearance_hinge(poly, x, weight, margin, false, acc);
    }

    /// Hinge on the smooth-min clearance to the boundary of a keep-in region.
    fn keep_inside(&self, poly: &Polygon<T>, x: &EgoState<T>, weight: T, margin: T, acc: &mut Quad6<T>) {
        self.clearance_hinge(poly, x, weight, margin, true, acc);
    }

    fn clearance_hinge(
        &self,
        poly: &Polygon<T>,
        x: &EgoState<T>,
        weight: T,
        margin: T,
        inside: bool,
        acc: &mut Quad6<T>,
    ) {
        let radius = covering_radius(&self.vehicle);
        let offsets = covering_offsets(&self.vehicle);
        let clearances: Vec<Clearance<T>> =
            offsets.iter().map(|&o| circle_clearance(poly, x, o, radius, inside)).collect();
        let values: Vec<T> = clearances.iter().map(|c| c.value).collect();
        let agg = SmoothAggregate::new(&values, self.weights.beta)
            .expect("three clearances are never empty");

        let t = margin - agg.value;
        if t <= T::zero() {
            return;
        }

        // Chain the aggregate through the per-circle pose derivatives.
        let mut grad3 = SVector::<T, 3>::zeros();
        let mut hess3 = SMatrix::<T, 3, 3>::zeros();
        for (i, c) in clearances.iter().enumerate() {
            grad3 += c.grad * agg.first[i];
            hess3 += c.hess * agg.first[i];
        }
        for (i, ci) in clearances.iter().enumerate() {
            for (j, cj) in clearances.iter().enumerate() {
                hess3 += ci.grad * cj.grad.transpose() * agg.second(i, j);
            }
        }

        let two = real::<T>(2.0);
        acc.value += weight * t * t;
        let gscale = -two * weight * t;
        for a in 0..3 {
            acc.grad[a] += gscale * grad3[a];
            for b in 0..3 {
                acc.hess[(a, b)] += two * weight * grad3[a] * grad3[b] + gscale * hess3[(a, b)];
            }
        }
    }

    /// Squared signed lateral offset of the vehicle center to the reference
    /// line. The center has no heading dependence, so derivatives live in
    /// (x, y) only.
    fn reference_tracking(&self, x: &EgoState<T>, acc: &mut Quad6<T>) {
        let w = self.weights.reference;
        let p = x.position();
        let proj = self.reference.project(p);
        let lateral = proj.lateral;

        let eps = real::<T>(1e-9);
        let seg = proj.segment;
        let pts = self.reference.points();
        let at_endpoint =
            proj.foot.distance(pts[seg]) <= eps || proj.foot.distance(pts[seg + 1]) <= eps;

        // grad/hess of the signed lateral with respect to (x, y).
        let (lx, ly, mut h2);
        let dist = p.distance(proj.foot);
        if !at_endpoint || dist <= eps {
            // Foot on a segment interior: lateral is affine in the position.
            let tangent = (pts[seg + 1] - pts[seg]).normalized().expect("non-degenerate segment");
            let n = tangent.perp();
            lx = n.x;
            ly = n.y;
            h2 = SMatrix::<T, 2, 2>::zeros();
        } else {
            // Foot pinned at a vertex: signed distance to a point.
            let sign = if lateral < T::zero() { -T::one() } else { T::one() };
            let wvec = (p - proj.foot).scale(T::one() / dist);
            lx = sign * wvec.x;
            ly = sign * wvec.y;
            h2 = SMatrix::<T, 2, 2>::identity() - SMatrix::<T, 2, 2>::from([
                [wvec.x * wvec.x, wvec.x * wvec.y],
                [wvec.x * wvec.y, wvec.y * wvec.y],
            ]);
            h2 *= sign / dist;
        }

        let two = real::<T>(2.0);
        acc.value += w * lateral * lateral;
        acc.grad[0] += two * w * lateral * lx;
        acc.grad[1] += two * w * lateral * ly;
        acc.hess[(0, 0)] += two * w * (lx * lx + lateral * h2[(0, 0)]);
        acc.hess[(0, 1)] += two * w * (lx * ly + lateral * h2[(0, 1)]);
        acc.hess[(1, 0)] += two * w * (ly * lx + lateral * h2[(1, 0)]);
        acc.hess[(1, 1)] += two * w * (ly * ly + lateral * h2[(1, 1)]);
    }

    /// Quadratic hinges on the state box bounds.
    fn state_bounds(&self, x: &EgoState<T>, acc: &mut Quad6<T>) {
        let w = self.weights.kinematic_state;
        let two = real::<T>(2.0);
        let v = x.to_vector();
        for d in 0..6 {
            let over = v[d] - self.vehicle.state_upper[d];
            if over > T::zero() {
                acc.value += w * over * over;
                acc.grad[d] += two * w * over;
                acc.hess[(d, d)] += two * w;
            }
            let under = self.vehicle.state_lower[d] - v[d];
            if under > T::zero() {
                acc.value += w * under * under;
                acc.grad[d] -= two * w * under;
                acc.hess[(d, d)] += two * w;
            }
        }
    }

    /// Squared acceleration and squared lateral acceleration
    /// `(v^2 tan(steer) / wheelbase)^2`.
    fn comfort_state(&self, x: &EgoState<T>, acc: &mut Quad6<T>) {
        let two = real::<T>(2.0);
        let w_a = self.weights.accel;
        acc.value += w_a * x.accel * x.accel;
        acc.grad[4] += two * w_a * x.accel;
        acc.hess[(4, 4)] += two * w_a;

        let w_l = self.weights.lateral_accel;
        let l = self.vehicle.wheelbase;
        let v = x.speed;
        let tan_d = x.steer.tan();
        let sec2 = T::one() + tan_d * tan_d;
        let a_lat = v * v * tan_d / l;
        let four = real::<T>(4.0);
        acc.value += w_l * a_lat * a_lat;
        // d(a_lat)/dv = 2 v tan / l, d(a_lat)/dsteer = v^2 sec^2 / l.
        acc.grad[3] += w_l * four * v * v * v * tan_d * tan_d / (l * l);
        acc.grad[5] += two * w_l * v * v * v * v * tan_d * sec2 / (l * l);
        acc.hess[(3, 3)] += real::<T>(12.0) * w_l * v * v * tan_d * tan_d / (l * l);
        let cross = real::<T>(8.0) * w_l * v * v * v * tan_d * sec2 / (l * l);
        acc.hess[(3, 5)] += cross;
        acc.hess[(5, 3)] += cross;
        acc.hess[(5, 5)] +=
            w_l * v * v * v * v * (two * sec2 * sec2 + four * tan_d * tan_d * sec2) / (l * l);
    }

    /// Control comfort plus control box hinges; value, gradient, Hessian.
    fn control_quad(&self, u: &Control<T>) -> (T, ControlVector<T>, ControlMatrix<T>) {
        let two = real::<T>(2.0);
        let mut value = T::zero();
        let mut grad = ControlVector::zeros();
        let mut hess = ControlMatrix::zeros();

        let weights = [self.weights.jerk, self.weights.steer_rate];
        let uv = u.to_vector();
        for d in 0..2 {
            value += weights[d] * uv[d] * uv[d];
            grad[d] += two * weights[d] * uv[d];
            hess[(d, d)] += two * weights[d];

            let w = self.weights.kinematic_control;
            let over = uv[d] - self.vehicle.control_upper[d];
            if over > T::zero() {
                value += w * over * over;
                grad[d] += two * w * over;
                hess[(d, d)] += two * w;
            }
            let under = self.vehicle.control_lower[d] - uv[d];
            if under > T::zero() {
                value += w * under * under;
                grad[d] -= two * w * under;
                hess[(d, d)] += two * w;
            }
        }
        (value, grad, hess)
    }
}

/// Offsets of the three covering circles along the vehicle's long axis.
pub fn covering_offsets<T: Real>(vehicle: &VehicleParams<T>) -> [T; 3] {
    let step = real::<T>(2.0) * vehicle.half_length / real::<T>(3.0);
    [-step, T::zero(), step]
}

/// Radius covering one third of the footprint.
pub fn covering_radius<T: Real>(vehicle: &VehicleParams<T>) -> T {
    let a = vehicle.half_length / real::<T>(3.0);
    (a * a + vehicle.half_width * vehicle.half_width).sqrt()
}

/// Signed clearance of the covering circle at longitudinal `offset` to
/// `poly`, with exact pose derivatives.
///
/// `inside = false`: clearance = signed distance − radius (positive when the
/// circle clears the polygon). `inside = true`: clearance = −signed distance
/// − radius (positive when the circle is fully inside).
fn circle_clearance<T: Real>(
    poly: &Polygon<T>,
    x: &EgoState<T>,
    offset: T,
    radius: T,
    inside: bool,
) -> Clearance<T> {
    let (sin_h, cos_h) = x.heading.sin_cos();
    let center = Point2::new(x.x + offset * cos_h, x.y + offset * sin_h);
    let query = poly.distance_query(center);

    // Gradient and Hessian of the signed distance with respect to the center.
    let eps = real::<T>(1e-9);
    let diff = center - query.nearest;
    let dist = diff.norm();
    let (g, h2) = if dist > eps {
        let sign = if query.signed < T::zero() { -T::one() } else { T::one() };
        let u = diff.scale(T::one() / dist);
        let g = u.scale(sign);
        let h2 = match query.feature {
            // Fixed edge: signed distance is affine in the center.
            NearestFeature::Edge(_) => SMatrix::<T, 2, 2>::zeros(),
            // Fixed vertex: distance to a point.
            NearestFeature::Vertex(_) => {
                let mut m = SMatrix::<T, 2, 2>::identity();
                m[(0, 0)] -= u.x * u.x;
                m[(0, 1)] -= u.x * u.y;
                m[(1, 0)] -= u.x * u.y;
                m[(1, 1)] -= u.y * u.y;
                m * (sign / dist)
            }
        };
        (g, h2)
    } else {
        // Center exactly on the boundary: take the local edge normal,
        // oriented by probing which side is inside.
        let vertices = poly.vertices();
        let n = vertices.len();
        let dir = match query.feature {
            NearestFeature::Edge(i) => (vertices[(i + 1) % n] - vertices[i])
                .normalized()
                .expect("polygon edges are non-degenerate"),
            NearestFeature::Vertex(i) => {
                let prev = vertices[(i + n - 1) % n];
                let next = vertices[(i + 1) % n];
                (next - prev).normalized().unwrap_or(Point2::new(T::one(), T::zero()))
            }
        };
        let normal = dir.perp();
        let probe = center + normal.scale(real::<T>(1e-6));
        let g = if poly.contains(probe) { -normal } else { normal };
        (g, SMatrix::<T, 2, 2>::zeros())
    };

    // Chain through the circle center: linear in (x, y), curved in heading.
    let jac_theta = Point2::new(-offset * sin_h, offset * cos_h);
    let mut grad = SVector::<T, 3>::zeros();
    grad[0] = g.x;
    grad[1] = g.y;
    grad[2] = g.dot(jac_theta);

    let mut hess = SMatrix::<T, 3, 3>::zeros();
    let cols = [Point2::new(T::one(), T::zero()), Point2::new(T::zero(), T::one()), jac_theta];
    for (a, ca) in cols.iter().enumerate() {
        for (b, cb) in cols.iter().enumerate() {
            hess[(a, b)] = ca.x * (h2[(0, 0)] * cb.x + h2[(0, 1)] * cb.y)
                + ca.y * (h2[(1, 0)] * cb.x + h2[(1, 1)] * cb.y);
        }
    }
    // Second derivative of the center itself with respect to heading.
    hess[(2, 2)] += g.x * (-offset * cos_h) + g.y * (-offset * sin_h);

    let sign = if inside { -T::one() } else { T::one() };
    Clearance {
        value: sign * query.signed - radius,
        grad: grad * sign,
        hess: hess * sign,
    }
}
