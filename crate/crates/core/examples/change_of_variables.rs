//! Maps a composition to the reduced variables `(varrho, q)` and back, and
//! prints the coefficients the reduced system needs.

use mixflow::changevar::{BasisChoice, BasisPair, ChangeOfVariables};
use mixflow::thermo::{Composition, FreeEnergyModel, SpeciesSystem};

fn main() -> mixflow::Result<()> {
    let model = FreeEnergyModel::ideal_gas(SpeciesSystem::new(vec![1.0, 2.0, 3.0], 1.0)?, 1.0)?;
    let basis = BasisPair::new(3, &BasisChoice::LastSpeciesDifferences)?;
    let cv = ChangeOfVariables::new(model, basis)?;

    let rho = Composition::from_slice(&[0.4, 0.9, 0.7])?;
    let reduced = cv.reduce(&rho)?;
    println!(
        "varrho = {:.6}, q = {:?}",
        reduced.varrho,
        reduced.q.as_slice()
    );

    let point = cv.evaluate(&reduced, None)?;
    println!("reconstructed rho = {:?}", point.rho.as_slice());
    println!("shift M(varrho, q) = {:.6}", point.shift);
    println!(
        "pressure P = {:.6}, dP/dvarrho = {:.6}",
        point.p, point.p_rho
    );
    println!("R = {:?}", point.r.as_slice());
    println!("R_q = {:.6}", point.r_q);
    println!("dM/dvarrho = {:.6}", cv.shift_derivative_varrho(&reduced)?);

    let other = BasisPair::new(
        3,
        &BasisChoice::Custom(vec![vec![1.0, -1.0, 0.0], vec![1.0, 1.0, -2.0]]),
    )?;
    let cv2 = ChangeOfVariables::new(cv.model().clone(), other)?;
    let again = cv2.reconstruct(&cv2.reduce(&rho)?)?;
    println!(
        "same rho in a second basis: {:?}",
        again.values().as_slice()
    );
    Ok(())
}
