pub struct TryIntrinsicArg {
    pub result: usize,
}

fn panic_callback(data_ptr: *mut u8, payload: usize) {
    let data = unsafe { &mut *(data_ptr as *mut TryIntrinsicArg) };
    data.result = payload;
}
