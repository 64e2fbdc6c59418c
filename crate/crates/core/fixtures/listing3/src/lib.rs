use core::marker::PhantomData;

pub struct IoPort<T, A> {
    port: u16,
    value_marker: PhantomData<T>,
    access_marker: PhantomData<A>,
}

impl<T, A> IoPort<T, A> {
    /// # Safety: creating an I/O port is a privileged operation.
    pub const unsafe fn new(port: u16) -> Self {
        Self { port, value_marker: PhantomData, access_marker: PhantomData }
    }

    pub fn read(&self) -> T {
        unsafe { PortRead::read_from_port(self.port) }
    }
}
