/** Client-side form validation mirroring the server's enrollment rules. */

export const PIN_PATTERN = /^[0-9]{5}$/;
export const MIN_ENROLL_IMAGES = 3;

export interface EnrollForm {
  subjectId: string;
  displayName: string;
  pin: string;
  images: string[]; // base64 PPM payloads
}

/** Returns a list of field errors; empty means the form may be submitted. */
export function validateEnrollForm(form: EnrollForm): string[] {
  const errors: string[] = [];
  if (form.subjectId.trim() === "") {
    errors.push("subject id is required");
  }
  if (form.displayName.trim() === "") {
    errors.push("display name is required");
  }
  if (!PIN_PATTERN.test(form.pin)) {
    errors.push("pin must be exactly 5 digits");
  }
  if (form.images.length < MIN_ENROLL_IMAGES) {
    errors.push(`at least ${MIN_ENROLL_IMAGES} images are required`);
  }
  return errors;
}

export function validatePeriod(tFrom: number, tTo: number): string[] {
  return tFrom < tTo ? [] : ["period start must be before period end"];
}
