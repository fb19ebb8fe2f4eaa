//! Row reduction over a small prime field.

fn inv(a: u8, p: u8) -> u8 {
    (1..p).find(|&b| (a as u16 * b as u16) % p as u16 == 1).expect("nonzero element of F_p")
}

/// Reduced row echelon form with zero rows removed.
pub fn rref(rows: &[Vec<u8>], p: u8) -> Vec<Vec<u8>> {
    let mut m: Vec<Vec<u8>> = rows.to_vec();
    let width = m.first().map_or(0, |r| r.len());
    let mut lead = 0;
    for c in 0..width {
        let Some(piv) = (lead..m.len()).find(|&r| m[r][c] != 0) else { continue };
        m.swap(lead, piv);
        let s = inv(m[lead][c], p);
        for x in m[lead].iter_mut() {
            *x = (*x as u16 * s as u16 % p as u16) as u8;
        }
        for r in 0..m.len() {
            if r != lead && m[r][c] != 0 {
                let f = m[r][c];
                for j in 0..width {
                    let sub = (f as u16 * m[lead][j] as u16) % p as u16;
                    m[r][j] = ((m[r][j] as u16 + p as u16 - sub) % p as u16) as u8;
                }
            }
        }
        lead += 1;
        if lead == m.len() {
            break;
        }
    }
    m.truncate(lead);
    m
}

/// Basis of `{x ∈ F_p^width : r·x = 0 for every row r}`.
pub fn nullspace(rows: &[Vec<u8>], width: usize, p: u8) -> Vec<Vec<u8>> {
    let r = rref(rows, p);
    let pivots: Vec<usize> =
        r.iter().map(|row| row.iter().position(|&x| x != 0).expect("nonzero row")).collect();
    (0..width)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![0u8; width];
            v[free] = 1;
            for (row, &pc) in r.iter().zip(&pivots) {
                v[pc] = (p - row[free]) % p;
            }
            v
        })
        .collect()
}
