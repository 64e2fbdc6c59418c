pub struct A {
    p: *mut u8,
}

impl A {
    /// # Safety
    ///
    /// `p` must be valid for reads and writes.
    pub unsafe fn new(p: *mut u8) -> Self {
        A { p }
    }

    pub unsafe fn from_raw(p: *mut u8) -> Self {
        A { p }
    }

    /// # Safety
    ///
    /// The pointee must be initialized.
    pub unsafe fn get(&self) -> u8 {
        *self.p
    }

    pub unsafe fn set(&self, v: u8) {
        *self.p = v;
    }
}

pub struct B(u32);

impl B {
    pub unsafe fn new(v: u32) -> B {
        B(v)
    }
}

pub struct C {
    len: usize,
}

impl C {
    /// # Safety
    ///
    /// `len` must not exceed the buffer.
    pub unsafe fn with(len: usize) -> Option<Self> {
        Some(C { len })
    }

    /// # Safety
    /// - Interrupts are disabled.
    pub unsafe fn helper() -> u32 {
        0
    }
}

pub trait Port {
    /// # Safety
    ///
    /// The port must be owned by the caller.
    unsafe fn poke(&self, v: u8);
}

impl Port for C {
    unsafe fn poke(&self, _v: u8) {}
}

/// # Safety
///
/// `n` must be a power of two.
pub unsafe fn f1(n: usize) -> usize {
    n - 1
}

pub unsafe fn f2() {}

unsafe fn f3() {}
