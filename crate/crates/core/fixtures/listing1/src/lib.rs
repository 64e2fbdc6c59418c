pub struct MyType(usize);

fn is_valid(x: &MyType) -> bool {
    x.0 != 0
}

pub fn foo(x: MyType) {
    if is_valid(&x) {
        unsafe {
            doUnsafe(x);
        }
    }
}
