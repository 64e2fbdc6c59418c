pub struct MyStruct<T> {
    x: *const T,
    n: i32,
}

impl<T: Copy> MyStruct<T> {
    fn new(x: *const T) -> Self {
        MyStruct { x, n: 0 }
    }

    /// # Safety
    ///
    /// `x` must point to an initialized `T`.
    unsafe fn deref(&self) -> T {
        *self.x
    }

    fn foo(&self) -> T {
        unsafe { self.deref() }
    }

    fn bar(&self) -> i32 {
        let _ = unsafe { self.deref() };
        self.n
    }
}
