/** Keyboard bindings: a full route can be labeled without a pointer.
 *
 *   j / k       next / previous step
 *   enter       open the wizard on the selected step
 *   p           pass the current dimension
 *   n / r / w   fail with nonsense / rather-not / worthwhile
 *   escape      leave the wizard
 *   g           back to the route list
 */

export interface KeyHandlers {
  nextStep(): void;
  previousStep(): void;
  openWizard(): void;
  closeWizard(): void;
  pass(): void;
  fail(severity: "nonsense" | "rather_not" | "worthwhile"): void;
  goToList(): void;
}

export function bindKeys(target: EventTarget, handlers: KeyHandlers): () => void {
  const listener = (event: Event) => {
    const key = (event as KeyboardEvent).key;
    switch (key) {
      case "j":
        handlers.nextStep();
        break;
      case "k":
        handlers.previousStep();
        break;
      case "Enter":
        handlers.openWizard();
        break;
      case "Escape":
        handlers.closeWizard();
        break;
      case "p":
        handlers.pass();
        break;
      case "n":
        handlers.fail("nonsense");
        break;
      case "r":
        handlers.fail("rather_not");
        break;
      case "w":
        handlers.fail("worthwhile");
        break;
      case "g":
        handlers.goToList();
        break;
      default:
        return;
    }
    event.preventDefault();
  };
  target.addEventListener("keydown", listener);
  return () => target.removeEventListener("keydown", listener);
}
