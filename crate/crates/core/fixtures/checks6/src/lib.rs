/// # Safety
///
/// `n` must be below the table size.
pub unsafe fn slot(n: usize) -> usize {
    n
}

pub fn page_size() -> usize {
    4096
}

pub fn literal() -> usize {
    unsafe { slot(4) }
}

pub fn forwarded(n: usize) -> usize {
    unsafe { slot(n) }
}

pub fn guarded(n: usize) -> usize {
    if n < 8 {
        unsafe { slot(n) }
    } else {
        0
    }
}

pub fn fixed() -> usize {
    unsafe { slot(page_size()) }
}

pub fn derived(v: &[usize]) -> usize {
    let k = v.len() * 2;
    unsafe { slot(k) }
}

pub struct Table {
    n: usize,
}

impl Table {
    pub fn new() -> Self {
        Table { n: 3 }
    }

    pub fn lookup(&self) -> usize {
        unsafe { slot(self.n) }
    }
}
