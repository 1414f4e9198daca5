#![no_main]
#[no_mangle]
pub fn f(a: [i32; 5]) -> i32 {
    let mut sum = 0;
    let fixed = [1, 2, 3, 4, 5];
    for i in a.iter().chain(fixed.iter()) {
        sum += i;
    }
    sum
}
