/** Login and registration form; fills the session token on success. */

import { ApiError, login, register } from '../api.js';
import { el } from '../dom.js';
import { store } from '../state.js';

export function renderAuth(root: HTMLElement): void {
  root.innerHTML = '';
  const username = el('input', {
    id: 'auth-username',
    name: 'username',
    autocomplete: 'username',
    placeholder: 'username',
  });
  const secret = el('input', {
    id: 'auth-secret',
    name: 'secret',
    type: 'password',
    autocomplete: 'current-password',
    placeholder: 'password',
  });
  const message = el('p', { class: 'auth-message', role: 'alert' });

  async function submit(registerFirst: boolean): Promise<void> {
    message.textContent = '';
    try {
      if (registerFirst) {
        await register(username.value, secret.value);
      }
      const token = await login(username.value, secret.value);
      store.set({ token, username: username.value, error: null });
    } catch (error) {
      message.textContent =
        error instanceof ApiError
          ? `${error.code}: ${error.message}`
          : String(error);
    }
  }

  const loginButton = el('button', { id: 'auth-login', text: 'Log in' });
  loginButton.addEventListener('click', () => void submit(false));
  const registerButton = el('button', {
    id: 'auth-register',
    class: 'secondary',
    text: 'Register and log in',
  });
  registerButton.addEventListener('click', () => void submit(true));

  root.append(
    el('section', { class: 'auth card' }, [
      el('h2', { text: 'Sign in' }),
      el('label', { for: 'auth-username', text: 'Username' }),
      username,
      el('label', { for: 'auth-secret', text: 'Password' }),
      secret,
      el('div', { class: 'row' }, [loginButton, registerButton]),
      message,
    ]),
  );
}
