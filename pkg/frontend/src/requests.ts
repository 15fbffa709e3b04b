/** Request sequencing: at most one live request per panel, superseded
 * responses dropped by monotonically increasing ids, and a trailing-edge
 * debounce for slider commits. */

export class RequestGate {
  private nextId = 0;
  private latestIssued = -1;
  private latestRendered = -1;

  /** Issue a new request id; every earlier id becomes stale. */
  issue(): number {
    const id = this.nextId++;
    this.latestIssued = id;
    return id;
  }

  /** A response may render only if no newer request was issued and
   * nothing newer has already rendered. */
  shouldRender(id: number): boolean {
    if (id !== this.latestIssued || id <= this.latestRendered) return false;
    this.latestRendered = id;
    return true;
  }

  get inFlight(): boolean {
    return this.latestIssued > this.latestRendered;
  }
}

export type Debounced<A extends unknown[]> = ((...args: A) => void) & {
  cancel: () => void;
  flush: () => void;
};

/** Trailing-edge debounce: the wrapped function runs `waitMs` after the
 * last call, with the last call's arguments. */
export function debounce<A extends unknown[]>(
  fn: (...args: A) => void,
  waitMs: number,
): Debounced<A> {
  let timer: ReturnType<typeof setTimeout> | undefined;
  let pending: A | undefined;
  const wrapped = (...args: A) => {
    pending = args;
    if (timer !== undefined) clearTimeout(timer);
    timer = setTimeout(() => {
      timer = undefined;
      const args2 = pending as A;
      pending = undefined;
      fn(...args2);
    }, waitMs);
  };
  wrapped.cancel = () => {
    if (timer !== undefined) clearTimeout(timer);
    timer = undefined;
    pending = undefined;
  };
  wrapped.flush = () => {
    if (timer === undefined || pending === undefined) return;
    clearTimeout(timer);
    timer = undefined;
    const args = pending;
    pending = undefined;
    fn(...args);
  };
  return wrapped as Debounced<A>;
}

export const SLIDER_DEBOUNCE_MS = 250;
