pub unsafe fn sink(p: *const u8) -> u8 {
    *p
}

pub fn a(p: *const u8) -> u8 {
    unsafe { sink(p) }
}

pub fn b(p: *const u8) -> u8 {
    unsafe { sink(p) }
}

pub fn c(p: *const u8) -> u8 {
    unsafe { *p }
}

fn d(p: *const u8) -> u8 {
    unsafe { sink(p) }
}

pub(crate) fn e(p: *const u8) -> u8 {
    unsafe { *p }
}

pub fn checked(p: *const u8) -> u8 {
    if p.is_null() {
        return 0;
    }
    unsafe { sink(p) }
}
