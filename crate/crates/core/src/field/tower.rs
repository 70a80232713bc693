use super::{build_field, FieldElement, FieldError, FieldSpec};

/// Embedding `k -> k_n` of a base field into its degree-`n` extension,
/// realized as `F_{p^{mn}}` with its default modulus.
#[derive(Clone, Debug)]
pub struct TowerEmbedding {
    base: FieldSpec,
    top: FieldSpec,
    degree: u32,
    image_of_generator: FieldElement,
    map: Vec<u32>,
    preimage: Vec<u32>,
}

const NOT_IN_IMAGE: u32 = u32::MAX;

/// Builds `k_n` over `base` together with the embedding sending the base
/// generator to the first root of the base modulus in the top field's
/// enumeration order.
pub fn build_tower(base: &FieldSpec, n: u32) -> Result<(FieldSpec, TowerEmbedding), FieldError> {
    if n == 0 {
        return Err(FieldError::ZeroDegree);
    }
    let top = build_field(base.p(), base.m() * n, None)?;
    let modulus = base.modulus();
    let root = (0..top.q())
        .find(|&x| {
            // Horner with prime-field coefficients; prime subfield indices
            // coincide with their integer values
            let v = modulus
                .iter()
                .rev()
                .fold(0, |acc, &c| top.add_raw(top.mul_raw(acc, x), c));
            v == 0
        })
        .expect("the base modulus splits in the top field");

    let p = base.p();
    let mut powers = Vec::with_capacity(base.m() as usize);
    let mut cur = 1;
    for _ in 0..base.m() {
        powers.push(cur);
        cur = top.mul_raw(cur, root);
    }
    let map: Vec<u32> = (0..base.q())
        .map(|mut idx| {
            let mut acc = 0;
            for &pw in &powers {
                let c = idx % p;
                idx /= p;
                acc = top.add_raw(acc, top.mul_raw(c, pw));
            }
            acc
        })
        .collect();
    let mut preimage = vec![NOT_IN_IMAGE; top.q() as usize];
    for (i, &img) in map.iter().enumerate() {
        preimage[img as usize] = i as u32;
    }
    let emb = TowerEmbedding {
        base: base.clone(),
        image_of_generator: top.wrap(root),
        top: top.clone(),
        degree: n,
        map,
        preimage,
    };
    Ok((top, emb))
}

impl TowerEmbedding {
    pub fn base(&self) -> &FieldSpec {
        &self.base
    }

    pub fn top(&self) -> &FieldSpec {
        &self.top
    }

    /// Relative degree `n = [k_n : k]`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn image_of_generator(&self) -> FieldElement {
        self.image_of_generator
    }

    pub fn embed(&self, x: FieldElement) -> Result<FieldElement, FieldError> {
        self.base.check(x)?;
        Ok(self.top.wrap(self.map[x.index() as usize]))
    }

    /// Preimage of a top element lying in the image of the base field.
    pub fn restrict(&self, x: FieldElement) -> Option<FieldElement> {
        if !self.top.contains(x) {
            return None;
        }
        match self.preimage[x.index() as usize] {
            NOT_IN_IMAGE => None,
            v => Some(self.base.wrap(v)),
        }
    }

    #[inline(always)]
    pub(crate) fn embed_raw(&self, x: u32) -> u32 {
        self.map[x as usize]
    }

    /// Relative trace `tr_{k_n/k}(x) = sum_{j<n} x^{q^j}` as a base element.
    pub fn trace(&self, x: FieldElement) -> Result<FieldElement, FieldError> {
        self.top.check(x)?;
        let q = self.base.q() as u64;
        let mut acc = 0;
        let mut y = x.index();
        for _ in 0..self.degree {
            acc = self.top.add_raw(acc, y);
            y = self.top.pow_raw(y, q);
        }
        Ok(self
            .restrict(self.top.wrap(acc))
            .expect("relative trace lands in the base field"))
    }
}

/// Absolute trace `tr_{F/F_p}(x)` as an element of `F_p`.
pub fn trace_to_prime(fs: &FieldSpec, x: FieldElement) -> Result<FieldElement, FieldError> {
    let class = fs.character_class(x)?;
    let fp = FieldSpec::prime(fs.p())?;
    Ok(fp.from_int(class as i64))
}
