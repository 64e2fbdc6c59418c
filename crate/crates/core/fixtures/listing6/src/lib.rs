pub struct LocalKey<T: 'static> {
    inner: unsafe fn() -> T,
}

impl<T: 'static> LocalKey<T> {
    pub const unsafe fn new(inner: unsafe fn() -> T) -> LocalKey<T> {
        LocalKey { inner }
    }

    pub fn try_with<F, R>(&'static self, f: F) {
        unsafe {
            let thread_local = (self.inner)();
        }
    }
}

unsafe fn cpu_local_slot() -> u32 {
    0
}

unsafe fn task_local_slot() -> u64 {
    0
}
