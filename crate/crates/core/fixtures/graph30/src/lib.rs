/// # Safety
///
/// `p` must be valid.
pub unsafe fn read_raw(p: *const u64) -> u64 {
    *p
}

/// # Safety
///
/// `p` must be valid and unaliased.
pub unsafe fn write_raw(p: *mut u64, v: u64) {
    *p = v;
}

pub unsafe fn zero_page(base: usize) {
    let _ = base;
}

pub fn peek(p: *const u64) -> u64 {
    unsafe { read_raw(p) }
}

pub fn poke(p: *mut u64) {
    unsafe { write_raw(p, 0) }
}

pub fn clear() {
    unsafe { zero_page(0x1000) }
}

pub fn isolated_block() -> u32 {
    let x = 3;
    unsafe { core::hint::unreachable_unchecked_if(x) }
}

pub struct Frame {
    base: usize,
    len: usize,
}

impl Frame {
    pub fn new() -> Self {
        Frame { base: 0, len: 0 }
    }

    /// # Safety
    ///
    /// `base` must be page aligned.
    pub unsafe fn from_raw(base: usize, len: usize) -> Self {
        Frame { base, len }
    }

    pub fn clear(&self) {
        unsafe { zero_page(self.base) }
    }

    pub fn len(&self) -> usize {
        unsafe { self.raw_len() }
    }

    unsafe fn raw_len(&self) -> usize {
        self.len
    }
}

pub struct Mapper {
    root: *mut u64,
}

impl Mapper {
    pub fn new(root: *mut u64) -> Option<Self> {
        if root.is_null() {
            None
        } else {
            Some(Mapper { root })
        }
    }

    pub fn map(&self, frame: &Frame) {
        unsafe { write_raw(self.root, frame.len() as u64) }
    }

    pub fn translate(&self) -> u64 {
        unsafe { read_raw(self.root) }
    }

    pub fn flush(&self, frame: &Frame) -> usize {
        unsafe { frame.raw_len() }
    }
}

static mut TICKS: u64 = 0;

pub fn tick() {
    unsafe { TICKS += 1 }
}

pub fn ticks() -> u64 {
    unsafe { TICKS }
}

extern "C" {
    fn port_in(p: u16) -> u8;
}

pub fn port(p: u16) -> u8 {
    unsafe { port_in(p) }
}

pub fn both(p: u16) -> u8 {
    unsafe { port_in(p) + port_in(p + 1) }
}

pub fn raw_copy(src: *const u8, dst: *mut u8) {
    unsafe { *dst = *src }
}

pub fn release(p: usize) {
    unsafe { allocator::free(p) }
}

pub fn empty_block() {
    unsafe {}
}
