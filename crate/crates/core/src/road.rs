//! Directed road graph and the two-route reference network.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::SimError;

/// Meters per second for 50 km/h.
pub const URBAN_SPEED: f64 = 13.89;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub length: f64,
    pub speed_limit: f64,
}

/// The two origin-destination routes every scenario graph carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Route {
    Primary,
    Alternate,
}

impl Route {
    pub fn as_str(self) -> &'static str {
        match self {
            Route::Primary => "primary",
            Route::Alternate => "alternate",
        }
    }
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A location along a route: which member edge, and how far into it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutePosition {
    pub route: Route,
    pub edge_index: usize,
    pub offset: f64,
}

impl RoutePosition {
    pub fn start(route: Route) -> Self {
        RoutePosition {
            route,
            edge_index: 0,
            offset: 0.0,
        }
    }
}

/// Shape of the reference network. All distances in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geometry {
    /// Shared stretch from the origin to the junction.
    pub common_prefix: f64,
    /// Total origin-to-destination length via the primary branch.
    pub primary_length: f64,
    /// Total origin-to-destination length via the alternate branch.
    pub alternate_length: f64,
    pub speed_limit: f64,
}

impl Default for Geometry {
    fn default() -> Self {
        Geometry {
            common_prefix: 200.0,
            primary_length: 1000.0,
            alternate_length: 1400.0,
            speed_limit: URBAN_SPEED,
        }
    }
}

/// One invariant violation found by [`RoadGraph::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DanglingEdge { edge: EdgeId, node: NodeId },
    NonPositiveLength(EdgeId),
    NonPositiveSpeed(EdgeId),
    UnknownEdgeInRoute { route: String, edge: EdgeId },
    Discontiguous { route: String, at: usize },
    MissingRoute(&'static str),
    EndpointMismatch,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingEdge { edge, node } => {
                write!(f, "edge {edge} references unknown node {}", node.0)
            }
            Violation::NonPositiveLength(e) => write!(f, "edge {e} has non-positive length"),
            Violation::NonPositiveSpeed(e) => write!(f, "edge {e} has non-positive speed limit"),
            Violation::UnknownEdgeInRoute { route, edge } => {
                write!(f, "route {route} references unknown edge {edge}")
            }
            Violation::Discontiguous { route, at } => {
                write!(f, "route {route} is not contiguous after member {at}")
            }
            Violation::MissingRoute(name) => write!(f, "route {name} is missing"),
            Violation::EndpointMismatch => {
                f.write_str("primary and alternate do not share origin and destination")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoadGraph {
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub routes: BTreeMap<String, Vec<EdgeId>>,
}

impl RoadGraph {
    /// Builds origin, junction, destination and a rectangular detour.
    ///
    /// The primary branch runs straight from the junction to the
    /// destination; the alternate branch leaves the junction sideways by
    /// `(alternate - primary) / 2`, runs parallel, and comes back.
    pub fn reference(geom: &Geometry) -> Result<RoadGraph, SimError> {
        let Geometry {
            common_prefix,
            primary_length,
            alternate_length,
            speed_limit,
        } = *geom;
        if !(common_prefix > 0.0) || !(speed_limit > 0.0) {
            return Err(SimError::Geometry(
                "common prefix and speed limit must be positive".into(),
            ));
        }
        if !(primary_length > common_prefix) {
            return Err(SimError::Geometry(
                "primary must be longer than the common prefix".into(),
            ));
        }
        if !(alternate_length > primary_length) {
            return Err(SimError::Geometry(format!(
                "alternate length {alternate_length} must exceed primary length {primary_length}"
            )));
        }
        let side = (alternate_length - primary_length) / 2.0;
        let node = |id, x, y| Node {
            id: NodeId(id),
            x,
            y,
        };
        let nodes = vec![
            node(0, 0.0, 0.0),
            node(1, common_prefix, 0.0),
            node(2, primary_length, 0.0),
            node(3, common_prefix, side),
            node(4, primary_length, side),
        ];
        let edge = |id, from, to, length| Edge {
            id: EdgeId(id),
            from: NodeId(from),
            to: NodeId(to),
            length,
            speed_limit,
        };
        let branch = primary_length - common_prefix;
        let edges = vec![
            edge(0, 0, 1, common_prefix),
            edge(1, 1, 2, branch),
            edge(2, 1, 3, side),
            edge(3, 3, 4, branch),
            edge(4, 4, 2, side),
        ];
        let mut routes = BTreeMap::new();
        routes.insert("primary".to_string(), vec![EdgeId(0), EdgeId(1)]);
        routes.insert(
            "alternate".to_string(),
            vec![EdgeId(0), EdgeId(2), EdgeId(3), EdgeId(4)],
        );
        let g = RoadGraph {
            nodes,
            edges,
            routes,
        };
        debug_assert!(g.validate().is_ok());
        Ok(g)
    }

    pub fn edge(&self, id: EdgeId) -> &Edge {
        &self.edges[id.0]
    }

    fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn route_edges(&self, name: &str) -> Result<&[EdgeId], SimError> {
        self.routes
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| SimError::UnknownRoute(name.to_string()))
    }

    pub fn route(&self, route: Route) -> &[EdgeId] {
        self.route_edges(route.as_str())
            .expect("scenario graph carries both routes")
    }

    pub fn route_length(&self, name: &str) -> Result<f64, SimError> {
        Ok(self
            .route_edges(name)?
            .iter()
            .map(|e| self.edge(*e).length)
            .sum())
    }

    pub fn free_flow_time(&self, name: &str) -> Result<f64, SimError> {
        Ok(self
            .route_edges(name)?
            .iter()
            .map(|e| {
                let e = self.edge(*e);
                e.length / e.speed_limit
            })
            .sum())
    }

    /// Number of leading edges the two routes share.
    pub fn shared_prefix_len(&self) -> usize {
        let p = self.route(Route::Primary);
        let a = self.route(Route::Alternate);
        p.iter().zip(a).take_while(|(x, y)| x == y).count()
    }

    /// Distance from the route start to `pos`.
    pub fn distance_along(&self, pos: &RoutePosition) -> f64 {
        let edges = self.route(pos.route);
        edges[..pos.edge_index]
            .iter()
            .map(|e| self.edge(*e).length)
            .sum::<f64>()
            + pos.offset
    }

    /// Position at distance `d` from the start of `route`, clamped to its end.
    pub fn position_at(&self, route: Route, d: f64) -> RoutePosition {
        let edges = self.route(route);
        let mut rest = d.max(0.0);
        for (i, e) in edges.iter().enumerate() {
            let len = self.edge(*e).length;
            if rest < len || i + 1 == edges.len() {
                return RoutePosition {
                    route,
                    edge_index: i,
                    offset: rest.min(len),
                };
            }
            rest -= len;
        }
        RoutePosition::start(route)
    }

    pub fn edge_at(&self, pos: &RoutePosition) -> &Edge {
        self.edge(self.route(pos.route)[pos.edge_index])
    }

    /// Planar coordinates, interpolated linearly along the edge.
    pub fn coords(&self, pos: &RoutePosition) -> (f64, f64) {
        let e = self.edge_at(pos);
        let (a, b) = (self.node(e.from), self.node(e.to));
        match (a, b) {
            (Some(a), Some(b)) => {
                let f = (pos.offset / e.length).clamp(0.0, 1.0);
                (a.x + (b.x - a.x) * f, a.y + (b.y - a.y) * f)
            }
            _ => (0.0, 0.0),
        }
    }

    pub fn position_is_valid(&self, pos: &RoutePosition) -> bool {
        let edges = self.route(pos.route);
        pos.edge_index < edges.len()
            && pos.offset >= 0.0
            && pos.offset <= self.edge(edges[pos.edge_index]).length + 1e-9
    }

    /// Every invariant violation; an empty list means the graph is usable.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        for e in &self.edges {
            for n in [e.from, e.to] {
                if self.node(n).is_none() {
                    out.push(Violation::DanglingEdge {
                        edge: e.id,
                        node: n,
                    });
                }
            }
            if !(e.length > 0.0) {
                out.push(Violation::NonPositiveLength(e.id));
            }
            if !(e.speed_limit > 0.0) {
                out.push(Violation::NonPositiveSpeed(e.id));
            }
        }
        for (name, members) in &self.routes {
            let mut known = true;
            for &id in members {
                if id.0 >= self.edges.len() {
                    out.push(Violation::UnknownEdgeInRoute {
                        route: name.clone(),
                        edge: id,
                    });
                    known = false;
                }
            }
            if !known {
                continue;
            }
            for (k, pair) in members.windows(2).enumerate() {
                if self.edge(pair[0]).to != self.edge(pair[1]).from {
                    out.push(Violation::Discontiguous {
                        route: name.clone(),
                        at: k,
                    });
                }
            }
        }
        let mut ends = Vec::new();
        for name in ["primary", "alternate"] {
            match self.routes.get(name) {
                None => out.push(Violation::MissingRoute(name)),
                Some(r) => {
                    let valid = r.iter().all(|e| e.0 < self.edges.len());
                    if let (true, Some(first), Some(last)) = (valid, r.first(), r.last()) {
                        ends.push((self.edge(*first).from, self.edge(*last).to));
                    }
                }
            }
        }
        if ends.len() == 2 && ends[0] != ends[1] {
            out.push(Violation::EndpointMismatch);
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}
