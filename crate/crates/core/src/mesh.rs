//! Structured tetrahedral meshes with tagged boundary facets.

use crate::geom;
use crate::{Error, Result, Vec3};
use std::collections::HashMap;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Slip,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryTag {
    pub kind: BoundaryKind,
    pub label: String,
}

impl BoundaryTag {
    pub fn new(kind: BoundaryKind, label: impl Into<String>) -> Self {
        Self {
            kind,
            label: label.into(),
        }
    }

    pub fn dirichlet(label: impl Into<String>) -> Self {
        Self::new(BoundaryKind::Dirichlet, label)
    }

    pub fn neumann(label: impl Into<String>) -> Self {
        Self::new(BoundaryKind::Neumann, label)
    }

    pub fn slip(label: impl Into<String>) -> Self {
        Self::new(BoundaryKind::Slip, label)
    }
}

#[derive(Clone, Debug)]
pub struct BoundaryFacet {
    /// Ordered so that `(v1 - v0) × (v2 - v0)` points out of the domain.
    pub vertices: [usize; 3],
    /// The tetrahedron owning this facet.
    pub tet: usize,
    /// Local index (0..4) of the owning tet's vertex opposite the facet.
    pub opposite: usize,
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    facets: Vec<BoundaryFacet>,
    facet_lookup: HashMap<[usize; 3], usize>,
    h: f64,
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// Local vertex triples of the four faces; face `i` is opposite vertex `i`.
pub const TET_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

impl Mesh {
    /// Builds a mesh from positively oriented tets. Boundary facets are found
    /// topologically and tagged with `tagger(facet_coordinates)`.
    pub fn new(
        vertices: Vec<Vec3>,
        tets: Vec<[usize; 4]>,
        h: f64,
        mut tagger: impl FnMut(&[Vec3; 3]) -> BoundaryTag,
    ) -> Result<Self> {
        for (t, tet) in tets.iter().enumerate() {
            if tet.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidInput(format!("tet {t} references a missing vertex")));
            }
            let vol = signed_volume(&vertices, tet);
            if !(vol > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "tet {t} has non-positive volume {vol:e}"
                )));
            }
        }

        let mut owners: HashMap<[usize; 3], (usize, usize, usize)> = HashMap::new();
        for (t, tet) in tets.iter().enumerate() {
            for (opp, face) in TET_FACES.iter().enumerate() {
                let key = sorted3([tet[face[0]], tet[face[1]], tet[face[2]]]);
                let entry = owners.entry(key).or_insert((t, opp, 0));
                entry.2 += 1;
                if entry.2 > 2 {
                    return Err(Error::InvalidInput(format!(
                        "facet {key:?} shared by more than two tets"
                    )));
                }
            }
        }

        let mut boundary: Vec<([usize; 3], usize, usize)> = owners
            .into_iter()
            .filter(|(_, (_, _, count))| *count == 1)
            .map(|(key, (t, opp, _))| (key, t, opp))
            .collect();
        boundary.sort_unstable();

        let mut facets = Vec::with_capacity(boundary.len());
        let mut facet_lookup = HashMap::with_capacity(boundary.len());
        for (key, t, opp) in boundary {
            let tet = tets[t];
            let face = TET_FACES[opp];
            let mut verts = [tet[face[0]], tet[face[1]], tet[face[2]]];
            let n = geom::cross(
                &geom::sub(&vertices[verts[1]], &vertices[verts[0]]),
                &geom::sub(&vertices[verts[2]], &vertices[verts[0]]),
            );
            let inward = geom::sub(&vertices[tet[opp]], &vertices[verts[0]]);
            if geom::dot(&n, &inward) > 0.0 {
                verts.swap(1, 2);
            }
            let coords = verts.map(|v| vertices[v]);
            facet_lookup.insert(key, facets.len());
            facets.push(BoundaryFacet {
                vertices: verts,
                tet: t,
                opposite: opp,
                tag: tagger(&coords),
            });
        }

        Ok(Self {
            vertices,
            tets,
            facets,
            facet_lookup,
            h,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn boundary_facets(&self) -> &[BoundaryFacet] {
        &self.facets
    }

    /// Characteristic cell size.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.vertices, &self.tets[t])
    }

    pub fn volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    pub fn tet_coords(&self, t: usize) -> [Vec3; 4] {
        self.tets[t].map(|v| self.vertices[v])
    }

    pub fn facet_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.facets[f].vertices.map(|v| self.vertices[v]);
        0.5 * geom::norm(&geom::cross(&geom::sub(&b, &a), &geom::sub(&c, &a)))
    }

    pub fn facet_centroid(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.facets[f].vertices.map(|v| self.vertices[v]);
        geom::scale(&geom::add(&geom::add(&a, &b), &c), 1.0 / 3.0)
    }

    /// Outward unit normal of boundary facet `f`.
    pub fn boundary_normal(&self, f: usize) -> Vec3 {
        let [a, b, c] = self.facets[f].vertices.map(|v| self.vertices[v]);
        let n = geom::cross(&geom::sub(&b, &a), &geom::sub(&c, &a));
        geom::scale(&n, 1.0 / geom::norm(&n))
    }

    /// Index of the boundary facet with the given vertices (any order).
    pub fn find_boundary_facet(&self, vertices: [usize; 3]) -> Option<usize> {
        self.facet_lookup.get(&sorted3(vertices)).copied()
    }

    pub fn diameter(&self) -> f64 {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        geom::norm(&geom::sub(&hi, &lo))
    }
}

fn signed_volume(vertices: &[Vec3], tet: &[usize; 4]) -> f64 {
    let [a, b, c, d] = tet.map(|v| vertices[v]);
    let m = geom::from_columns(&geom::sub(&b, &a), &geom::sub(&c, &a), &geom::sub(&d, &a));
    geom::det(&m) / 6.0
}

/// Outward unit normal of a boundary facet given by its vertex indices.
pub fn facet_normal(mesh: &Mesh, vertices: [usize; 3]) -> Result<Vec3> {
    mesh.find_boundary_facet(vertices)
        .map(|f| mesh.boundary_normal(f))
        .ok_or(Error::NotBoundaryFacet(vertices))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoxFace {
    XMin,
    XMax,
    YMin,
    YMax,
    ZMin,
    ZMax,
}

/// The six Kuhn tetrahedra of the unit hex as corner bit patterns
/// (bit 0: +x, bit 1: +y, bit 2: +z).
fn kuhn_corners() -> [[usize; 4]; 6] {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    perms.map(|[a, b, _]| [0, 1 << a, (1 << a) | (1 << b), 7])
}

/// Splits hex cells into Kuhn tets, orienting each positively.
fn kuhn_split(
    vertices: &[Vec3],
    cells: impl Iterator<Item = [usize; 8]>,
) -> Vec<[usize; 4]> {
    let corners = kuhn_corners();
    let mut tets = Vec::new();
    for cell in cells {
        for c in &corners {
            let mut tet = c.map(|b| cell[b]);
            if signed_volume(vertices, &tet) < 0.0 {
                tet.swap(2, 3);
            }
            tets.push(tet);
        }
    }
    tets
}

/// Structured box `[0, ex] × [0, ey] × [0, ez]` with `n` cells per axis, six
/// Kuhn tets per cell. Facets are tagged by `tagger(face, facet_centroid)`.
pub fn build_box_mesh(
    n: usize,
    extent: Vec3,
    tagger: impl Fn(BoxFace, Vec3) -> BoundaryTag,
) -> Result<Mesh> {
    if n == 0 {
        return Err(Error::InvalidInput("box mesh needs n >= 1".into()));
    }
    if extent.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput(format!("box extent {extent:?} must be positive")));
    }
    let np = n + 1;
    let id = |i: usize, j: usize, k: usize| i + np * (j + np * k);
    let mut vertices = Vec::with_capacity(np * np * np);
    for k in 0..np {
        for j in 0..np {
            for i in 0..np {
                vertices.push([
                    extent[0] * i as f64 / n as f64,
                    extent[1] * j as f64 / n as f64,
                    extent[2] * k as f64 / n as f64,
                ]);
            }
        }
    }
    let cells = (0..n).flat_map(|k| {
        (0..n).flat_map(move |j| {
            (0..n).map(move |i| {
                let mut c = [0; 8];
                for (b, slot) in c.iter_mut().enumerate() {
                    *slot = id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                }
                c
            })
        })
    });
    let tets = kuhn_split(&vertices, cells);
    let h = extent.iter().fold(0.0f64, |m, e| m.max(e / n as f64));
    let diameter = geom::norm(&extent);
    let tol = 1e-10 * diameter;
    Mesh::new(vertices, tets, h, |coords| {
        let face = box_face_of(coords, &extent, tol).expect("boundary facet off the box surface");
        let c = geom::scale(&geom::add(&geom::add(&coords[0], &coords[1]), &coords[2]), 1.0 / 3.0);
        tagger(face, c)
    })
}

/// Unit cube with every boundary facet tagged Neumann.
pub fn build_unit_cube(n: usize) -> Result<Mesh> {
    build_box_mesh(n, [1.0; 3], |_, _| BoundaryTag::neumann("boundary"))
}

fn box_face_of(coords: &[Vec3; 3], extent: &Vec3, tol: f64) -> Option<BoxFace> {
    let on = |d: usize, value: f64| coords.iter().all(|p| (p[d] - value).abs() <= tol);
    let faces = [
        (0, 0.0, BoxFace::XMin),
        (0, extent[0], BoxFace::XMax),
        (1, 0.0, BoxFace::YMin),
        (1, extent[1], BoxFace::YMax),
        (2, 0.0, BoxFace::ZMin),
        (2, extent[2], BoxFace::ZMax),
    ];
    faces.iter().find(|(d, v, _)| on(*d, *v)).map(|f| f.2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AnnulusDivisions {
    pub radial: usize,
    pub angular: usize,
    pub axial: usize,
}

pub const ANNULUS_INNER: &str = "inner";
pub const ANNULUS_OUTER: &str = "outer";
pub const ANNULUS_END: &str = "end";

/// Structured thick-walled pipe around the z axis, `0 <= z <= length`.
/// Inner surface: Slip, outer surface: Dirichlet, end caps: Neumann.
pub fn build_annulus_mesh(
    r_in: f64,
    r_out: f64,
    length: f64,
    div: AnnulusDivisions,
) -> Result<Mesh> {
    if !(r_in > 0.0 && r_out > r_in && length > 0.0) {
        return Err(Error::InvalidInput(format!(
            "annulus needs 0 < r_in < r_out and length > 0 (got {r_in}, {r_out}, {length})"
        )));
    }
    if div.radial == 0 || div.axial == 0 || div.angular < 3 {
        return Err(Error::InvalidInput(format!(
            "annulus divisions {div:?} need radial, axial >= 1 and angular >= 3"
        )));
    }
    let (nr, nt, nz) = (div.radial, div.angular, div.axial);
    let id = |i: usize, j: usize, k: usize| i + (nr + 1) * ((j % nt) + nt * k);
    let mut vertices = Vec::with_capacity((nr + 1) * nt * (nz + 1));
    for k in 0..=nz {
        let z = length * k as f64 / nz as f64;
        for j in 0..nt {
            let theta = 2.0 * PI * j as f64 / nt as f64;
            for i in 0..=nr {
                let r = r_in + (r_out - r_in) * i as f64 / nr as f64;
                vertices.push([r * theta.cos(), r * theta.sin(), z]);
            }
        }
    }
    let cells = (0..nz).flat_map(|k| {
        (0..nt).flat_map(move |j| {
            (0..nr).map(move |i| {
                let mut c = [0; 8];
                for (b, slot) in c.iter_mut().enumerate() {
                    *slot = id(i + (b & 1), j + ((b >> 1) & 1), k + ((b >> 2) & 1));
                }
                c
            })
        })
    });
    let tets = kuhn_split(&vertices, cells);
    let h = ((r_out - r_in) / nr as f64)
        .max(2.0 * PI * r_out / nt as f64)
        .max(length / nz as f64);
    let diameter = (4.0 * r_out * r_out + length * length).sqrt();
    let tol = 1e-10 * diameter;
    Mesh::new(vertices, tets, h, |coords| {
        let radius = |p: &Vec3| p[0].hypot(p[1]);
        if coords.iter().all(|p| (radius(p) - r_in).abs() <= tol) {
            BoundaryTag::slip(ANNULUS_INNER)
        } else if coords.iter().all(|p| (radius(p) - r_out).abs() <= tol) {
            BoundaryTag::dirichlet(ANNULUS_OUTER)
        } else {
            BoundaryTag::neumann(ANNULUS_END)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cube_has_six_tets() {
        let m = build_unit_cube(1).unwrap();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.tets().len(), 6);
        assert_eq!(m.boundary_facets().len(), 12);
    }

    #[test]
    fn volumes_sum_to_box() {
        let m = build_unit_cube(2).unwrap();
        assert!((m.volume() - 1.0).abs() < 1e-14);
        let m = build_box_mesh(3, [1.0, 2.0, 0.5], |_, _| BoundaryTag::neumann("b")).unwrap();
        assert!((m.volume() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn finest_convergence_mesh_size() {
        let m = build_unit_cube(5).unwrap();
        assert!((m.h() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn refinement_halves_h_and_multiplies_tets() {
        for n in 1..4 {
            let a = build_unit_cube(n).unwrap();
            let b = build_unit_cube(2 * n).unwrap();
            assert!((a.h() / b.h() - 2.0).abs() < 1e-14);
            assert_eq!(b.tets().len(), 8 * a.tets().len());
        }
    }

    #[test]
    fn box_face_areas_and_normals() {
        let extent = [1.0, 2.0, 3.0];
        let m = build_box_mesh(3, extent, |face, _| {
            BoundaryTag::neumann(format!("{face:?}"))
        })
        .unwrap();
        let expected = [
            ("XMin", 6.0, [-1.0, 0.0, 0.0]),
            ("XMax", 6.0, [1.0, 0.0, 0.0]),
            ("YMin", 3.0, [0.0, -1.0, 0.0]),
            ("YMax", 3.0, [0.0, 1.0, 0.0]),
            ("ZMin", 2.0, [0.0, 0.0, -1.0]),
            ("ZMax", 2.0, [0.0, 0.0, 1.0]),
        ];
        for (label, area, normal) in expected {
            let mut total = 0.0;
            for (f, facet) in m.boundary_facets().iter().enumerate() {
                if facet.tag.label == label {
                    total += m.facet_area(f);
                    let n = m.boundary_normal(f);
                    for d in 0..3 {
                        assert!((n[d] - normal[d]).abs() < 1e-14);
                    }
                }
            }
            assert!((total - area).abs() <= 1e-12 * area, "{label}: {total}");
        }
    }

    #[test]
    fn facet_normal_lookup() {
        let m = build_unit_cube(1).unwrap();
        let bottom = m
            .boundary_facets()
            .iter()
            .find(|f| f.vertices.iter().all(|&v| m.vertices()[v][2] == 0.0))
            .unwrap();
        let n = facet_normal(&m, bottom.vertices).unwrap();
        assert_eq!(n, [0.0, 0.0, -1.0]);
        let right = m
            .boundary_facets()
            .iter()
            .find(|f| f.vertices.iter().all(|&v| m.vertices()[v][0] == 1.0))
            .unwrap();
        let mut rev = right.vertices;
        rev.reverse();
        assert_eq!(facet_normal(&m, rev).unwrap(), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn interior_facet_is_rejected() {
        let m = build_unit_cube(1).unwrap();
        // the main diagonal 0-7 is shared by all six tets, so every facet
        // containing it is interior
        let tet = m.tets()[0];
        let interior = [tet[0], tet[1], tet[3]];
        assert!(matches!(
            facet_normal(&m, interior),
            Err(Error::NotBoundaryFacet(_))
        ));
    }

    #[test]
    fn conforming_interior_facets() {
        // every interior facet has exactly two owners: total facet count identity
        let m = build_unit_cube(3).unwrap();
        let mut counts: HashMap<[usize; 3], usize> = HashMap::new();
        for tet in m.tets() {
            for face in TET_FACES {
                *counts
                    .entry(sorted3([tet[face[0]], tet[face[1]], tet[face[2]]]))
                    .or_default() += 1;
            }
        }
        let boundary = counts.values().filter(|&&c| c == 1).count();
        assert_eq!(boundary, m.boundary_facets().len());
        assert!(counts.values().all(|&c| c == 1 || c == 2));
        // 6 faces × n² squares × 2 triangles
        assert_eq!(boundary, 6 * 9 * 2);
    }

    #[test]
    fn seal_geometry_volume_matches_polygon() {
        let (r_in, r_out, len) = (0.006, 0.01, 0.02);
        let div = AnnulusDivisions {
            radial: 2,
            angular: 24,
            axial: 10,
        };
        let m = build_annulus_mesh(r_in, r_out, len, div).unwrap();
        assert_eq!(m.tets().len(), 2880);
        let nt = div.angular as f64;
        let polygon = len * 0.5 * nt * (2.0 * PI / nt).sin() * (r_out * r_out - r_in * r_in);
        assert!((m.volume() - polygon).abs() < 1e-12 * polygon);
        let exact = PI * (r_out * r_out - r_in * r_in) * len;
        let defect = (m.volume() - exact).abs() / exact;
        // sin(x)/x ≈ 1 - x²/6 with x = 2π/nθ
        assert!(defect < (2.0 * PI / nt).powi(2) / 6.0 * 1.01);
    }

    #[test]
    fn coarse_annulus_is_positively_oriented() {
        let m = build_annulus_mesh(
            1.0,
            2.0,
            1.0,
            AnnulusDivisions {
                radial: 1,
                angular: 4,
                axial: 1,
            },
        )
        .unwrap();
        assert!((0..m.tets().len()).all(|t| m.tet_volume(t) > 0.0));
    }

    #[test]
    fn inner_normals_point_to_axis() {
        let m = build_annulus_mesh(
            0.006,
            0.01,
            0.02,
            AnnulusDivisions {
                radial: 2,
                angular: 16,
                axial: 4,
            },
        )
        .unwrap();
        let mut seen = 0;
        for (f, facet) in m.boundary_facets().iter().enumerate() {
            if facet.tag.kind == BoundaryKind::Slip {
                seen += 1;
                let c = m.facet_centroid(f);
                let n = m.boundary_normal(f);
                let theta = c[1].atan2(c[0]);
                assert!(n[0] * c[0] + n[1] * c[1] < 0.0);
                // facets are flat chords: normal is within half a sector of radial
                let radial = [-theta.cos(), -theta.sin(), 0.0];
                assert!(geom::dot(&n, &radial) > (PI / 16.0).cos() - 1e-12);
                assert!(n[2].abs() < 1e-12);
            }
        }
        assert_eq!(seen, 16 * 4 * 2);
    }

    #[test]
    fn annulus_rejects_degenerate_radii() {
        let div = AnnulusDivisions {
            radial: 1,
            angular: 8,
            axial: 1,
        };
        assert!(build_annulus_mesh(1.0, 1.0, 1.0, div).is_err());
        assert!(build_annulus_mesh(0.0, 1.0, 1.0, div).is_err());
        assert!(build_annulus_mesh(1.0, 2.0, 1.0, AnnulusDivisions { angular: 2, ..div }).is_err());
    }
}
