pub static mut PHYSICAL_MEMORY_OFFSET: VirtAddr = VirtAddr::zero();

#[derive(Clone, Copy)]
pub struct VirtAddr(u64);

impl VirtAddr {
    pub const fn zero() -> VirtAddr {
        VirtAddr(0)
    }
}

#[derive(Clone, Copy)]
pub struct PhysAddr(u64);

impl PhysAddr {
    /// # Safety: Bits in the range 52 to 64 have requirements.
    pub const unsafe fn new_unchecked(addr: u64) -> PhysAddr {
        PhysAddr(addr)
    }

    pub fn new(addr: u64) -> PhysAddr {
        assert_eq!(addr.get_bits(52..64), 0, "Can not have any bits in the range 52 to 64 set");
        unsafe { PhysAddr::new_unchecked(addr) }
    }

    pub const fn as_u64(self) -> u64 {
        self.0
    }

    pub fn as_hhdm_virt(&self) -> VirtAddr {
        unsafe { crate::PHYSICAL_MEMORY_OFFSET + self.as_u64() }
    }
}
