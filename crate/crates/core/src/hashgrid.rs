//! Spatial hashing over image clouds in R^6: collision detection for the
//! sampled injectivity invariants.

use std::collections::HashMap;

use crate::point::C3Point;

type CellKey = [i64; 6];

fn cell_of(z: &C3Point, cell: f64) -> CellKey {
    let c = z.to_reals();
    let mut k = [0i64; 6];
    for i in 0..6 {
        k[i] = (c[i] / cell).floor() as i64;
    }
    k
}

/// Count pairs whose images lie within `image_eps` while their preimages are
/// at least `preimage_min` apart. Hash-grid cells of size image_eps keep the
/// pair scan local; only same-cell and adjacent-cell pairs are compared.
pub fn collision_count(
    preimages: &[C3Point],
    images: &[C3Point],
    image_eps: f64,
    preimage_min: f64,
) -> usize {
    assert_eq!(preimages.len(), images.len());
    let cell = image_eps.max(1e-300);
    let mut grid: HashMap<CellKey, Vec<u32>> = HashMap::new();
    for (i, w) in images.iter().enumerate() {
        grid.entry(cell_of(w, cell)).or_default().push(i as u32);
    }
    let mut collisions = 0usize;
    let mut neighbor = [0i64; 6];
    for (key, members) in &grid {
        // same cell
        for a in 0..members.len() {
            for b in a + 1..members.len() {
                let (i, j) = (members[a] as usize, members[b] as usize);
                if images[i].dist(&images[j]) < image_eps
                    && preimages[i].dist(&preimages[j]) > preimage_min
                {
                    collisions += 1;
                }
            }
        }
        // neighbor cells with strictly larger keys, to visit each pair once
        let mut offs = [0i8; 6];
        loop {
            // advance odometer over {-1,0,1}^6
            let mut carry = true;
            for d in offs.iter_mut() {
                if carry {
                    *d += 1;
                    if *d > 1 {
                        *d = -1;
                    } else {
                        carry = false;
                    }
                }
            }
            if carry {
                break;
            }
            if offs.iter().all(|&d| d == 0) {
                continue;
            }
            for i in 0..6 {
                neighbor[i] = key[i] + offs[i] as i64;
            }
            if neighbor.as_slice() <= key.as_slice() {
                continue;
            }
            if let Some(others) = grid.get(&neighbor) {
                for &ia in members {
                    for &ib in others {
                        let (i, j) = (ia as usize, ib as usize);
                        if images[i].dist(&images[j]) < image_eps
                            && preimages[i].dist(&preimages[j]) > preimage_min
                        {
                            collisions += 1;
                        }
                    }
                }
            }
        }
    }
    collisions
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_a_planted_collision() {
        let pre = vec![
            C3Point::from_re(0.0, 0.0, 0.0),
            C3Point::from_re(1.0, 0.0, 0.0),
            C3Point::from_re(0.0, 2.0, 0.0),
        ];
        let img = vec![
            C3Point::from_re(0.5, 0.5, 0.5),
            C3Point::from_re(0.5, 0.5, 0.5000000001),
            C3Point::from_re(9.0, 9.0, 9.0),
        ];
        assert_eq!(collision_count(&pre, &img, 1e-9, 1e-4), 1);
        assert_eq!(collision_count(&pre, &img, 1e-12, 1e-4), 0);
    }

    #[test]
    fn near_duplicates_of_close_preimages_are_not_collisions() {
        let pre = vec![
            C3Point::from_re(0.0, 0.0, 0.0),
            C3Point::from_re(1e-6, 0.0, 0.0),
        ];
        let img = vec![
            C3Point::from_re(0.5, 0.5, 0.5),
            C3Point::from_re(0.5, 0.5, 0.5),
        ];
        assert_eq!(collision_count(&pre, &img, 1e-9, 1e-4), 0);
    }
}
