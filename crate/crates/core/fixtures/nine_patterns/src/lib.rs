//! One audit unit per structural pattern.

/// # Safety
///
/// `p` must be a valid pointer.
pub unsafe fn uf(p: *const u8) -> u8 {
    *p
}

static BYTE: u8 = 7;

pub fn sf_uf() -> u8 {
    unsafe { uf(&BYTE) }
}

pub struct A {
    v: u8,
}

impl A {
    pub fn new() -> Self {
        A { v: 0 }
    }

    /// # Safety
    ///
    /// The value must be initialized.
    pub unsafe fn um(&self) -> u8 {
        self.v
    }
}

pub struct B {
    v: u8,
}

impl B {
    /// # Safety
    ///
    /// `v` must be non-zero.
    pub unsafe fn new(v: u8) -> Self {
        B { v }
    }

    /// # Safety
    ///
    /// The value must be non-zero.
    pub unsafe fn um(&self) -> u8 {
        self.v
    }
}

pub fn sf_um_cs(a: &A) -> u8 {
    unsafe { a.um() }
}

pub fn sf_um_cu(b: &B) -> u8 {
    unsafe { b.um() }
}

pub struct C;

impl C {
    pub fn new() -> Self {
        C
    }

    pub fn sm(&self) -> u8 {
        unsafe { uf(&BYTE) }
    }
}

pub struct D;

impl D {
    /// # Safety
    ///
    /// Must be called once.
    pub unsafe fn new() -> Self {
        D
    }

    pub fn sm(&self) -> u8 {
        unsafe { uf(&BYTE) }
    }
}

pub struct E;

impl E {
    pub fn new() -> Self {
        E
    }

    pub fn sm(&self, a: &A) -> u8 {
        unsafe { a.um() }
    }
}

pub struct F;

impl F {
    pub fn new() -> Self {
        F
    }

    pub fn sm(&self, b: &B) -> u8 {
        unsafe { b.um() }
    }
}

pub struct G;

impl G {
    /// # Safety
    ///
    /// Must be called once.
    pub unsafe fn new() -> Self {
        G
    }

    pub fn sm(&self, a: &A) -> u8 {
        unsafe { a.um() }
    }
}

pub struct H;

impl H {
    /// # Safety
    ///
    /// Must be called once.
    pub unsafe fn new() -> Self {
        H
    }

    pub fn sm(&self, b: &B) -> u8 {
        unsafe { b.um() }
    }
}
