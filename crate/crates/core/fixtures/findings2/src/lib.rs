pub unsafe fn raw_read(p: *const u32) -> u32 {
    *p
}

fn relay(p: *const u32) -> u32 {
    unsafe { raw_read(p) }
}

pub fn entry() -> u32 {
    relay(&7)
}
